//! The `expinterp` command-line front end.
//!
//! Every verb reads a JSON [`ProblemSpec`], runs one library pipeline and
//! writes either a JSON report or a CSV table. Failures are reported as a
//! JSON object on stderr with a stage-specific exit code.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charsol::{CharSolError, CharacteristicSolution};
use crate::corollary::{corollary_suite, Corollary};
use crate::functions::{CatalogFunction, FunctionEvaluator};
use crate::hermite::{self, HermiteError, InterpolationSystem, Slot, StandardBasis};
use crate::kernel::{ExponentialPolynomial, KernelError, Operator, RootDecomposition, RootMode};
use crate::output::{Cell, Json, Table};
use crate::remainder::{self, GreenKernel, RemainderError, RemainderReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_OPERATOR: i32 = 2;
pub const EXIT_SYSTEM: i32 = 3;
pub const EXIT_QUADRATURE: i32 = 4;
pub const EXIT_RESIDUAL: i32 = 5;

pub const THREADS_ENV: &str = "EXPINTERP_THREADS";

fn default_tolerance() -> f64 {
    1e-10
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub nodes: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedNode {
    pub node: f64,
    /// `f(a), f'(a), …`
    pub derivatives: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    Catalog(CatalogFunction),
    /// Node data only; no remainder can be formed from it.
    Tabulated(Vec<TabulatedNode>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// `c_0..c_n`, ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Scalar>>,
    /// `(re, im, multiplicity)` of each distinct root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<(f64, f64, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eval_points: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corollary: Option<Corollary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
            exit_code: EXIT_USAGE,
        }
    }

    pub fn to_json(&self) -> Json {
        Json::obj([(
            "error",
            Json::obj([
                ("kind", Json::str(self.kind)),
                ("message", Json::str(self.message.clone())),
                ("exit_code", Json::Int(self.exit_code as i64)),
            ]),
        )])
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        Self {
            kind: "operator",
            message: e.to_string(),
            exit_code: EXIT_OPERATOR,
        }
    }
}

impl From<CharSolError> for CliError {
    fn from(e: CharSolError) -> Self {
        Self {
            kind: "operator",
            message: e.to_string(),
            exit_code: EXIT_OPERATOR,
        }
    }
}

impl From<HermiteError> for CliError {
    fn from(e: HermiteError) -> Self {
        match e {
            HermiteError::CharSol(inner) => inner.into(),
            HermiteError::MissingData(_) | HermiteError::UnknownSlots(_) => Self {
                kind: "data",
                message: e.to_string(),
                exit_code: EXIT_USAGE,
            },
            _ => Self {
                kind: "system",
                message: e.to_string(),
                exit_code: EXIT_SYSTEM,
            },
        }
    }
}

impl From<RemainderError> for CliError {
    fn from(e: RemainderError) -> Self {
        match e {
            RemainderError::Hermite(inner) => inner.into(),
            RemainderError::Kernel(inner) => inner.into(),
            RemainderError::CharSol(inner) => inner.into(),
            RemainderError::DegenerateParameters(_) => Self {
                kind: "system",
                message: e.to_string(),
                exit_code: EXIT_SYSTEM,
            },
            _ => Self {
                kind: "function",
                message: e.to_string(),
                exit_code: EXIT_USAGE,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Characteristic solution of the operator.
    Omega,
    /// Standard basis of the kernel for the interpolation system.
    Basis,
    /// Kernel interpolant of the given function or node data.
    Interp,
    /// Check interpolant plus integral remainder against the function.
    Verify,
    /// Classical Green-kernel form for polynomial interpolation.
    Green,
}

#[derive(Debug, Parser)]
#[command(
    name = "expinterp",
    version,
    about = "Hermite-type interpolation in kernels of linear differential operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Problem specification (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Overrides the spec tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Evaluation grid `start:stop:count`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
}

/// A finished command: report body plus the exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Json,
    pub table: Table,
    pub exit_code: i32,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json.render(),
            Format::Csv => self.table.to_csv(),
        }
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("grid must be start:stop:count, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k + 1 == count {
                stop
            } else {
                start + h * k as f64
            }
        })
        .collect())
}

/// Options shared by every verb after flag resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub tolerance: f64,
    pub grid: Vec<f64>,
}

impl Options {
    pub fn resolve(
        spec: &ProblemSpec,
        tol: Option<f64>,
        grid: Option<&str>,
    ) -> Result<Self, CliError> {
        let tolerance = tol.unwrap_or(spec.tolerance);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(CliError::usage(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        let grid = grid.map(parse_grid).transpose()?.unwrap_or_default();
        Ok(Self { tolerance, grid })
    }
}

struct Kernel {
    op: Operator,
    rd: RootDecomposition,
    cs: CharacteristicSolution,
}

fn kernel(spec: &ProblemSpec) -> Result<Kernel, CliError> {
    let (op, mode) = match (&spec.coefficients, &spec.roots, &spec.corollary) {
        (Some(_), Some(_), _) => {
            return Err(CliError::usage(
                "give either coefficients or roots, not both",
            ))
        }
        (Some(c), None, _) => {
            let c: Vec<Complex64> = c.iter().map(|s| s.value()).collect();
            (Operator::new(&c)?, RootMode::Companion)
        }
        (None, Some(r), _) => {
            let roots: Vec<(Complex64, usize)> = r
                .iter()
                .map(|&(re, im, m)| (Complex64::new(re, im), m))
                .collect();
            (Operator::from_roots(&roots)?, RootMode::UserSupplied(roots))
        }
        (None, None, Some(cor)) => (cor.operator()?, RootMode::Companion),
        (None, None, None) => {
            return Err(CliError::usage(
                "spec needs coefficients, roots or a corollary",
            ))
        }
    };
    let rd = RootDecomposition::find(&op, mode)?;
    let cs = CharacteristicSolution::new(&op, &rd)?;
    Ok(Kernel { op, rd, cs })
}

fn system(spec: &ProblemSpec) -> Result<InterpolationSystem, CliError> {
    if let Some(s) = &spec.system {
        return Ok(InterpolationSystem::new(
            s.nodes.clone(),
            s.multiplicities.clone(),
        )?);
    }
    let Some(cor) = &spec.corollary else {
        return Err(CliError::usage("spec needs a system or a corollary"));
    };
    let (nodes, mults) = cor.nodes();
    let mut pairs: Vec<(f64, usize)> = nodes.into_iter().zip(mults).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, mults) = pairs.into_iter().unzip();
    Ok(InterpolationSystem::new(nodes, mults)?)
}

fn catalog_function(spec: &ProblemSpec) -> Result<&CatalogFunction, CliError> {
    match &spec.function {
        Some(FunctionSpec::Catalog(f)) => Ok(f),
        Some(FunctionSpec::Tabulated(_)) => Err(CliError::usage(
            "remainder commands need a catalog function; tabulated data has no off-node derivatives",
        )),
        None => Err(CliError::usage("spec has no function")),
    }
}

fn points(spec: &ProblemSpec, opts: &Options) -> Vec<f64> {
    spec.eval_points.iter().chain(&opts.grid).copied().collect()
}

fn ep_json(ep: &ExponentialPolynomial) -> Json {
    Json::Arr(
        ep.blocks()
            .iter()
            .map(|b| {
                Json::obj([
                    ("lambda", Json::complex(b.lambda)),
                    (
                        "coeffs",
                        Json::Arr(b.coeffs.iter().map(|&c| Json::complex(c)).collect()),
                    ),
                ])
            })
            .collect(),
    )
}

fn slot_json(s: Slot) -> Json {
    Json::obj([
        ("node", Json::Int(s.node as i64)),
        ("deriv", Json::Int(s.deriv as i64)),
    ])
}

fn system_json(sys: &InterpolationSystem) -> Json {
    Json::obj([
        ("nodes", Json::nums(sys.nodes().iter().copied())),
        (
            "multiplicities",
            Json::Arr(
                sys.multiplicities()
                    .iter()
                    .map(|&m| Json::Int(m as i64))
                    .collect(),
            ),
        ),
    ])
}

fn operator_json(k: &Kernel) -> Json {
    Json::obj([
        ("order", Json::Int(k.op.order() as i64)),
        (
            "coefficients",
            Json::Arr(k.op.coeffs().iter().map(|&c| Json::complex(c)).collect()),
        ),
        (
            "roots",
            Json::Arr(
                k.rd.roots()
                    .iter()
                    .map(|r| {
                        Json::obj([
                            ("value", Json::complex(r.value)),
                            ("multiplicity", Json::Int(r.multiplicity as i64)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

pub fn cmd_omega(spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    let k = kernel(spec)?;
    let n = k.op.order();
    let initial: Vec<Json> = (0..n)
        .map(|l| {
            Json::obj([
                ("order", Json::Int(l as i64)),
                ("value", Json::complex(k.cs.eval_derivative(l, 0.0))),
                ("target", Json::Num(if l == n - 1 { 1.0 } else { 0.0 })),
            ])
        })
        .collect();
    let mut table;
    let grid = points(spec, opts);
    let mut grid_json = Vec::with_capacity(grid.len());
    if grid.is_empty() {
        table = Table::new(["order", "re", "im", "target"]);
        for l in 0..n {
            let v = k.cs.eval_derivative(l, 0.0);
            table.push(vec![
                Cell::Int(l as i64),
                num(v.re),
                num(v.im),
                num(if l == n - 1 { 1.0 } else { 0.0 }),
            ]);
        }
    } else {
        table = Table::new(["t", "re", "im"]);
        for &t in &grid {
            let v = k.cs.evaluate(t);
            table.push(vec![num(t), num(v.re), num(v.im)]);
            grid_json.push(Json::obj([
                ("t", Json::Num(t)),
                ("value", Json::complex(v)),
            ]));
        }
    }
    let json = Json::obj([
        ("command", Json::str("omega")),
        ("operator", operator_json(&k)),
        ("omega", ep_json(k.cs.ep())),
        ("initial_values", Json::Arr(initial)),
        (
            "initial_value_deviation",
            Json::Num(k.cs.initial_value_deviation()),
        ),
        ("grid", Json::Arr(grid_json)),
    ]);
    Ok(Report {
        json,
        table,
        exit_code: EXIT_OK,
    })
}

pub fn cmd_basis(spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    let k = kernel(spec)?;
    let sys = system(spec)?;
    let basis = StandardBasis::new(&k.op, &k.rd, &sys)?;
    let slots = sys.slots();
    let grid = points(spec, opts);
    let table = if grid.is_empty() {
        let mut t = Table::new([
            "node",
            "deriv",
            "lambda_re",
            "lambda_im",
            "power",
            "coeff_re",
            "coeff_im",
        ]);
        for (slot, chi) in slots.iter().zip(basis.chis()) {
            for b in chi.blocks() {
                for (p, c) in b.coeffs.iter().enumerate() {
                    t.push(vec![
                        Cell::Int(slot.node as i64),
                        Cell::Int(slot.deriv as i64),
                        num(b.lambda.re),
                        num(b.lambda.im),
                        Cell::Int(p as i64),
                        num(c.re),
                        num(c.im),
                    ]);
                }
            }
        }
        t
    } else {
        let mut header = vec!["t".to_string()];
        for s in &slots {
            header.push(format!("chi_{}_{}_re", s.node, s.deriv));
            header.push(format!("chi_{}_{}_im", s.node, s.deriv));
        }
        let mut t = Table::new(header);
        for &x in &grid {
            let mut row = vec![num(x)];
            for chi in basis.chis() {
                let v = chi.evaluate(x);
                row.push(num(v.re));
                row.push(num(v.im));
            }
            t.push(row);
        }
        t
    };
    let grid_json: Vec<Json> = grid
        .iter()
        .map(|&x| {
            Json::obj([
                ("t", Json::Num(x)),
                (
                    "values",
                    Json::Arr(
                        basis
                            .chis()
                            .iter()
                            .map(|c| Json::complex(c.evaluate(x)))
                            .collect(),
                    ),
                ),
            ])
        })
        .collect();
    let json = Json::obj([
        ("command", Json::str("basis")),
        ("operator", operator_json(&k)),
        ("system", system_json(&sys)),
        ("wronskian", Json::complex(basis.wronskian())),
        ("condition_estimate", Json::Num(basis.condition_estimate())),
        ("ill_conditioned", Json::Bool(basis.is_ill_conditioned())),
        (
            "kronecker_deviation",
            Json::Num(basis.kronecker_deviation()),
        ),
        (
            "basis",
            Json::Arr(
                slots
                    .iter()
                    .zip(basis.chis())
                    .map(|(&s, chi)| Json::obj([("slot", slot_json(s)), ("blocks", ep_json(chi))]))
                    .collect(),
            ),
        ),
        ("grid", Json::Arr(grid_json)),
    ]);
    Ok(Report {
        json,
        table,
        exit_code: EXIT_OK,
    })
}

fn node_data(
    spec: &ProblemSpec,
    sys: &InterpolationSystem,
) -> Result<BTreeMap<Slot, Complex64>, CliError> {
    let mut data = BTreeMap::new();
    match &spec.function {
        Some(FunctionSpec::Catalog(f)) => {
            for (i, (&a, &m)) in sys.nodes().iter().zip(sys.multiplicities()).enumerate() {
                let d = f.derivatives(a, m - 1).map_err(RemainderError::from)?;
                for (j, v) in d.into_iter().enumerate() {
                    data.insert(Slot::new(i, j), v);
                }
            }
        }
        Some(FunctionSpec::Tabulated(rows)) => {
            for row in rows {
                let Some(i) = sys.nodes().iter().position(|&a| a == row.node) else {
                    return Err(CliError::usage(format!(
                        "tabulated node {} is not in the system",
                        row.node
                    )));
                };
                for (j, v) in row.derivatives.iter().enumerate() {
                    data.insert(Slot::new(i, j), v.value());
                }
            }
        }
        None => return Err(CliError::usage("spec has no function")),
    }
    Ok(data)
}

pub fn cmd_interp(spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    let k = kernel(spec)?;
    let sys = system(spec)?;
    let basis = StandardBasis::new(&k.op, &k.rd, &sys)?;
    let data = node_data(spec, &sys)?;
    let interp = hermite::interpolate(&basis, &data)?;
    let f = match &spec.function {
        Some(FunctionSpec::Catalog(f)) => Some(f),
        _ => None,
    };
    let mut header = vec!["x", "re", "im"];
    if f.is_some() {
        header.extend(["f_re", "f_im", "error"]);
    }
    let mut table = Table::new(header);
    let mut values = Vec::new();
    for x in points(spec, opts) {
        let p = interp.evaluate(x);
        let mut row = vec![num(x), num(p.re), num(p.im)];
        let mut fields = vec![("x", Json::Num(x)), ("value", Json::complex(p))];
        if let Some(f) = f {
            let fx = f.value(x).map_err(RemainderError::from)?;
            row.extend([num(fx.re), num(fx.im), num((fx - p).norm())]);
            fields.push(("function", Json::complex(fx)));
            fields.push(("error", Json::Num((fx - p).norm())));
        }
        table.push(row);
        values.push(Json::obj(fields));
    }
    let json = Json::obj([
        ("command", Json::str("interp")),
        ("operator", operator_json(&k)),
        ("system", system_json(&sys)),
        (
            "data",
            Json::Arr(
                data.iter()
                    .map(|(&s, &v)| {
                        Json::obj([("slot", slot_json(s)), ("value", Json::complex(v))])
                    })
                    .collect(),
            ),
        ),
        ("interpolant", ep_json(interp.ep())),
        (
            "interpolation_residual",
            Json::Num(interp.interpolation_residual(&sys)),
        ),
        ("condition_estimate", Json::Num(basis.condition_estimate())),
        ("values", Json::Arr(values)),
    ]);
    Ok(Report {
        json,
        table,
        exit_code: EXIT_OK,
    })
}

fn report_json(r: &RemainderReport, bound: f64) -> Vec<(&'static str, Json)> {
    let integrals = r
        .terms
        .iter()
        .map(|t| {
            Json::obj([
                ("slot", t.slot.map_or(Json::Null, slot_json)),
                ("data", Json::complex(t.data)),
                ("integral", Json::complex(t.integral.value)),
                ("weight", Json::complex(t.weight)),
                ("error_estimate", Json::Num(t.integral.error_estimate)),
                ("converged", Json::Bool(t.integral.converged)),
            ])
        })
        .collect();
    vec![
        ("x", Json::Num(r.x)),
        ("true_value", Json::complex(r.true_value)),
        ("interpolant_value", Json::complex(r.interpolant_value)),
        ("reconstructed", Json::complex(r.reconstructed)),
        ("residual", Json::Num(r.residual)),
        ("bound", Json::Num(bound)),
        ("k_check", Json::Num(r.k_check)),
        (
            "quadrature_error_estimate",
            Json::Num(r.quadrature_error_estimate),
        ),
        ("converged", Json::Bool(r.converged)),
        ("terms", Json::Arr(integrals)),
    ]
}

/// Quadrature runs this much tighter than the verification tolerance.
pub const QUADRATURE_MARGIN: f64 = 1e-2;

pub fn cmd_verify(spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    let f = catalog_function(spec)?;
    let k = kernel(spec)?;
    let sys = system(spec)?;
    let basis = StandardBasis::new(&k.op, &k.rd, &sys)?;
    let xs = points(spec, opts);
    if xs.is_empty() {
        return Err(CliError::usage("verify needs eval_points or --grid"));
    }
    let tol = opts.tolerance;
    let qtol = tol * QUADRATURE_MARGIN;
    let mut header = vec![
        "x",
        "f_re",
        "f_im",
        "interpolant_re",
        "interpolant_im",
        "reconstructed_re",
        "reconstructed_im",
        "residual",
        "bound",
        "quadrature_error",
        "converged",
    ];
    if spec.corollary.is_some() {
        header.push("corollary_residual");
    }
    let mut table = Table::new(header);
    let mut out = Vec::with_capacity(xs.len());
    let (mut max_residual, mut converged, mut passed) = (0.0f64, true, true);
    for &x in &xs {
        let r = remainder::reconstruct(&k.cs, &basis, f, x, qtol)?;
        let bound = tol * (1.0 + r.true_value.norm());
        max_residual = max_residual.max(r.residual);
        converged &= r.converged;
        passed &= r.residual <= bound;
        let mut row = vec![
            num(x),
            num(r.true_value.re),
            num(r.true_value.im),
            num(r.interpolant_value.re),
            num(r.interpolant_value.im),
            num(r.reconstructed.re),
            num(r.reconstructed.im),
            num(r.residual),
            num(bound),
            num(r.quadrature_error_estimate),
            Cell::Int(r.converged as i64),
        ];
        let mut fields = report_json(&r, bound);
        if let Some(cor) = &spec.corollary {
            let c = corollary_suite(cor, f, x, qtol)?;
            max_residual = max_residual.max(c.residual);
            converged &= c.converged;
            passed &= c.residual <= bound;
            row.push(num(c.residual));
            fields.push((
                "corollary",
                Json::obj([
                    ("case", Json::str(cor.label())),
                    ("reconstructed", Json::complex(c.reconstructed)),
                    ("residual", Json::Num(c.residual)),
                    (
                        "agreement",
                        Json::Num((c.reconstructed - r.reconstructed).norm()),
                    ),
                    ("converged", Json::Bool(c.converged)),
                ]),
            ));
        }
        table.push(row);
        out.push(Json::obj(fields));
    }
    let exit_code = if !converged {
        EXIT_QUADRATURE
    } else if !passed {
        EXIT_RESIDUAL
    } else {
        EXIT_OK
    };
    let json = Json::obj([
        ("command", Json::str("verify")),
        ("operator", operator_json(&k)),
        ("system", system_json(&sys)),
        ("tolerance", Json::Num(tol)),
        ("quadrature_tolerance", Json::Num(qtol)),
        ("points", Json::Arr(out)),
        (
            "summary",
            Json::obj([
                ("max_residual", Json::Num(max_residual)),
                ("converged", Json::Bool(converged)),
                ("passed", Json::Bool(passed && converged)),
            ]),
        ),
    ]);
    Ok(Report {
        json,
        table,
        exit_code,
    })
}

pub fn cmd_green(spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    let sys = system(spec)?;
    let n = sys.dimension();
    if spec.coefficients.is_some() || spec.roots.is_some() || spec.corollary.is_some() {
        let k = kernel(spec)?;
        if k.op != Operator::pure_derivative(n) {
            return Err(CliError::usage(format!(
                "the Green-kernel form needs the operator f^({n}) for this system"
            )));
        }
    }
    let gk = GreenKernel::new(&sys);
    let f = match &spec.function {
        Some(FunctionSpec::Catalog(f)) => Some(f),
        Some(FunctionSpec::Tabulated(_)) => return Err(catalog_function(spec).unwrap_err()),
        None => None,
    };
    let xs = if spec.eval_points.is_empty() {
        opts.grid.clone()
    } else {
        spec.eval_points.clone()
    };
    // the CSV holds G(x, t) when a t-grid is given, the reconstruction otherwise
    let kernel_rows = !spec.eval_points.is_empty() && !opts.grid.is_empty();
    let mut table = if kernel_rows {
        Table::new(["x", "t", "g"])
    } else if f.is_some() {
        Table::new([
            "x",
            "f_re",
            "f_im",
            "interpolant_re",
            "interpolant_im",
            "reconstructed_re",
            "reconstructed_im",
            "residual",
            "converged",
        ])
    } else {
        Table::new(["x"])
    };
    let mut out = Vec::with_capacity(xs.len());
    let mut converged = true;
    for &x in &xs {
        let mut fields = vec![("x", Json::Num(x))];
        if kernel_rows {
            let values: Vec<f64> = opts.grid.iter().map(|&t| gk.value(x, t)).collect();
            for (&t, &g) in opts.grid.iter().zip(&values) {
                table.push(vec![num(x), num(t), num(g)]);
            }
            fields.push(("kernel", Json::nums(values)));
        }
        if let Some(f) = f {
            let r =
                remainder::classical_reconstruct(&gk, f, x, opts.tolerance * QUADRATURE_MARGIN)?;
            converged &= r.converged;
            if !kernel_rows {
                table.push(vec![
                    num(x),
                    num(r.true_value.re),
                    num(r.true_value.im),
                    num(r.interpolant_value.re),
                    num(r.interpolant_value.im),
                    num(r.reconstructed.re),
                    num(r.reconstructed.im),
                    num(r.residual),
                    Cell::Int(r.converged as i64),
                ]);
            }
            fields.extend(report_json(
                &r,
                opts.tolerance * (1.0 + r.true_value.norm()),
            ));
        } else if !kernel_rows {
            table.push(vec![num(x)]);
        }
        out.push(Json::obj(fields));
    }
    let json = Json::obj([
        ("command", Json::str("green")),
        ("system", system_json(&sys)),
        ("t", Json::nums(opts.grid.iter().copied())),
        ("points", Json::Arr(out)),
    ]);
    Ok(Report {
        json,
        table,
        exit_code: if converged { EXIT_OK } else { EXIT_QUADRATURE },
    })
}

pub fn load_spec(path: &std::path::Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError {
        kind: "io",
        message: format!("{}: {e}", path.display()),
        exit_code: EXIT_USAGE,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError {
        kind: "spec",
        message: format!("{}: {e}", path.display()),
        exit_code: EXIT_USAGE,
    })
}

pub fn run_verb(verb: Verb, spec: &ProblemSpec, opts: &Options) -> Result<Report, CliError> {
    match verb {
        Verb::Omega => cmd_omega(spec, opts),
        Verb::Basis => cmd_basis(spec, opts),
        Verb::Interp => cmd_interp(spec, opts),
        Verb::Verify => cmd_verify(spec, opts),
        Verb::Green => cmd_green(spec, opts),
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(|n| Some(n.max(1)))
            .map_err(|_| {
                CliError::usage(format!(
                    "{THREADS_ENV} must be a non-negative integer, got {s:?}"
                ))
            }),
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let path = cli
        .spec
        .as_ref()
        .ok_or_else(|| CliError::usage("--spec is required"))?;
    let spec = load_spec(path)?;
    let opts = Options::resolve(&spec, cli.tol, cli.grid.as_deref())?;
    let report = match thread_count()? {
        None => run_verb(cli.verb, &spec, &opts)?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(|| run_verb(cli.verb, &spec, &opts))?,
    };
    let text = report.render(cli.format);
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError {
            kind: "io",
            message: format!("{}: {e}", p.display()),
            exit_code: EXIT_USAGE,
        })?,
        None => print!("{text}"),
    }
    Ok(report.exit_code)
}

/// Parses the process arguments, runs the verb and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprint!("{}", e.to_json().render());
            e.exit_code
        }
    }
}
