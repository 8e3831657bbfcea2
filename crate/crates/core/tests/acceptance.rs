//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, even when an earlier one fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use common::{random_kernel, random_kernel_element, random_nodes, random_system, rng, Kernel};
use expinterp::catalog::{
    biharmonic_fundamental, biharmonic_wronskian, closed_form_catalog, odd_hyperbolic_fundamental,
    odd_hyperbolic_wronskian, odd_hyperbolic_wronskian_product, odd_trigonometric_fundamental,
    odd_trigonometric_wronskian, odd_trigonometric_wronskian_product, CatalogCase,
    CharacteristicClosedForm,
};
use expinterp::charsol::ivp_solution;
use expinterp::corollary::{corollary_suite, Corollary};
use expinterp::functions::{CatalogFunction, FunctionEvaluator};
use expinterp::hermite::{interpolate_values, wronskian, InterpolationSystem, StandardBasis};
use expinterp::kernel::{ExponentialPolynomial, Operator, RootDecomposition, RootMode};
use expinterp::remainder::{classical_reconstruct, reconstruct, GreenKernel};
use num_complex::Complex64;
use rand::Rng;

/// What a criterion measured: pass flag plus a one-line summary.
type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn functions() -> Vec<CatalogFunction> {
    vec![
        CatalogFunction::Exp { sigma: 1.0 },
        CatalogFunction::t_sin(),
        CatalogFunction::runge(),
    ]
}

fn kernel_of(op: Operator) -> Kernel {
    let rd = RootDecomposition::find(&op, RootMode::Companion).unwrap();
    let cs = expinterp::charsol::CharacteristicSolution::new(&op, &rd).unwrap();
    Kernel { op, rd, cs }
}

fn node_values<F: FunctionEvaluator + ?Sized>(sys: &InterpolationSystem, f: &F) -> Vec<Complex64> {
    sys.nodes()
        .iter()
        .zip(sys.multiplicities())
        .flat_map(|(&a, &m)| f.derivatives(a, m - 1).unwrap())
        .collect()
}

fn characteristic_solutions() -> Outcome {
    let forms = [
        CharacteristicClosedForm::Power(1),
        CharacteristicClosedForm::Power(3),
        CharacteristicClosedForm::Power(6),
        CharacteristicClosedForm::Sinh,
        CharacteristicClosedForm::Sin,
        CharacteristicClosedForm::HalfSinhMinusSin,
        CharacteristicClosedForm::CoshMinusOne,
        CharacteristicClosedForm::OneMinusCos,
    ];
    let grid = linspace(-3.0, 3.0, 101);
    let (mut closed, mut ivp) = (0.0f64, 0.0f64);
    for form in forms {
        let k = kernel_of(form.operator());
        let oracle = ivp_solution(&k.op, &grid).unwrap();
        for (&t, o) in grid.iter().zip(oracle) {
            let exact = form.eval(t, 0);
            let scale = exact.abs().max(1.0);
            let w = k.cs.evaluate(t);
            closed = closed.max((w - exact).norm() / scale);
            ivp = ivp.max((w - o).norm() / scale);
        }
    }
    (
        closed <= 1e-9 && ivp <= 1e-8,
        format!("closed-form dev {closed:.2e} (<= 1e-9), IVP dev {ivp:.2e} (<= 1e-8)"),
    )
}

fn kronecker_identity() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = r.random_range(1..=8);
        let k = random_kernel(&mut r, n, 0.1, 1.0, i % 2 == 0, 1);
        worst = worst.max(k.cs.max_kronecker_residual());
    }
    (
        worst < 1e-9,
        format!("50 operators, max residual {worst:.2e} (< 1e-9)"),
    )
}

fn addition_formula() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    let mut check = |k: &Kernel, omegas: &[ExponentialPolynomial], r: &mut rand::rngs::StdRng| {
        for _ in 0..100 {
            let (u, v) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            for w in omegas {
                let lhs = w.evaluate(u + v);
                let rhs = k.cs.addition_formula_rhs(w, u, v);
                worst = worst.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
            }
        }
    };
    for c in [vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0]] {
        let k = Kernel::from_coeffs(&c);
        let mut omegas = k.rd.fundamental_system();
        omegas.push(k.cs.ep().clone());
        check(&k, &omegas, &mut r);
    }
    let k = kernel_of(Operator::pure_derivative(5));
    let monomials: Vec<ExponentialPolynomial> = (0..5)
        .map(|j| ExponentialPolynomial::monomial(Complex64::new(0.0, 0.0), j))
        .collect();
    check(&k, &monomials, &mut r);
    for i in 0..50 {
        let n = r.random_range(1..=6);
        let k = random_kernel(&mut r, n, 0.2, 1.0, i % 2 == 0, 2);
        let w = random_kernel_element(&mut r, &k);
        check(&k, &[w], &mut r);
    }
    (
        worst <= 1e-8,
        format!("max |LHS-RHS|/(1+|LHS|) {worst:.2e} (<= 1e-8)"),
    )
}

fn random_case(r: &mut rand::rngs::StdRng, kind: usize) -> CatalogCase {
    let pick = |r: &mut rand::rngs::StdRng, n| random_nodes(r, n, 0.0, 2.0, 0.2);
    match kind {
        0 => {
            let a = pick(r, 2);
            CatalogCase::Hyperbolic2 { a1: a[0], a2: a[1] }
        }
        1 => {
            let a = pick(r, 2);
            CatalogCase::Trigonometric2 { a1: a[0], a2: a[1] }
        }
        2 => {
            let a = pick(r, 2);
            CatalogCase::Biharmonic4 { a1: a[0], a2: a[1] }
        }
        3 => {
            let a = pick(r, 3);
            CatalogCase::OddHyperbolic3 {
                a1: a[0],
                a2: a[1],
                a3: a[2],
            }
        }
        4 => {
            let a = pick(r, 3);
            CatalogCase::OddTrigonometric3 {
                a1: a[0],
                a2: a[1],
                a3: a[2],
            }
        }
        5 => {
            let n = r.random_range(1..=6);
            CatalogCase::Lagrange { nodes: pick(r, n) }
        }
        _ => CatalogCase::Taylor {
            a: r.random_range(0.0..2.0),
            n: r.random_range(1..=6),
        },
    }
}

fn standard_basis() -> Outcome {
    let mut r = rng(4);
    let ts = linspace(-0.5, 2.5, 31);
    let (mut kron, mut pointwise) = (0.0f64, 0.0f64);
    for kind in 0..7 {
        for _ in 0..20 {
            let case = random_case(&mut r, kind);
            let cf = closed_form_catalog(&case).unwrap();
            let k = kernel_of(case.operator());
            let basis = StandardBasis::new(&k.op, &k.rd, cf.system()).unwrap();
            kron = kron
                .max(basis.kronecker_deviation())
                .max(cf.kronecker_deviation());
            for (s, chi) in basis.chis().iter().enumerate() {
                for &t in &ts {
                    let exact = cf.eval(s, t, 0);
                    pointwise =
                        pointwise.max((chi.evaluate(t) - exact).norm() / exact.abs().max(1.0));
                }
            }
        }
    }
    // single node with an arbitrary operator: closed construction vs linear solve
    for _ in 0..20 {
        let n = r.random_range(1..=6);
        let k = random_kernel(&mut r, n, 0.3, 1.0, true, 2);
        let a = r.random_range(0.0..2.0);
        let closed = StandardBasis::taylor(&k.cs, &k.rd, a).unwrap();
        let solved =
            StandardBasis::new(&k.op, &k.rd, &InterpolationSystem::taylor(a, n).unwrap()).unwrap();
        kron = kron.max(closed.kronecker_deviation());
        for (x, y) in closed.chis().iter().zip(solved.chis()) {
            for &t in &ts {
                let exact = x.evaluate(t);
                pointwise = pointwise.max((y.evaluate(t) - exact).norm() / exact.norm().max(1.0));
            }
        }
    }
    (
        kron < 1e-8 && pointwise <= 1e-8,
        format!("8 families x 20 node sets, Kronecker dev {kron:.2e} (< 1e-8), pointwise {pointwise:.2e} (<= 1e-8)"),
    )
}

fn wronskians() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    for _ in 0..50 {
        let a = random_nodes(&mut r, 2, 0.0, 2.0, 0.2);
        let sys = InterpolationSystem::new(a.clone(), vec![2, 2]).unwrap();
        let w = wronskian(&sys, &biharmonic_fundamental(a[1]))
            .unwrap()
            .determinant;
        worst = worst
            .max(rel(w.re, biharmonic_wronskian(a[0], a[1])))
            .max(w.im.abs());

        let a = random_nodes(&mut r, 3, 0.0, 2.0, 0.2);
        let (a1, a2, a3) = (a[0], a[1], a[2]);
        let sys = InterpolationSystem::new(a, vec![1, 1, 1]).unwrap();
        let h = wronskian(&sys, &odd_hyperbolic_fundamental(a3))
            .unwrap()
            .determinant;
        worst = worst
            .max(rel(h.re, odd_hyperbolic_wronskian(a1, a2, a3)))
            .max(rel(
                h.re.abs(),
                odd_hyperbolic_wronskian_product(a1, a2, a3).abs(),
            ));
        let t = wronskian(&sys, &odd_trigonometric_fundamental(a3))
            .unwrap()
            .determinant;
        worst = worst
            .max(rel(t.re, odd_trigonometric_wronskian(a1, a2, a3)))
            .max(rel(
                t.re.abs(),
                odd_trigonometric_wronskian_product(a1, a2, a3).abs(),
            ));
    }
    (
        worst <= 1e-10,
        format!("50 node sets, max relative dev {worst:.2e} (<= 1e-10)"),
    )
}

fn corollaries() -> Vec<Corollary> {
    vec![
        Corollary::ClassicalHermite {
            nodes: vec![0.0, 0.8, 1.7],
            multiplicities: vec![2, 1, 2],
        },
        Corollary::Lagrange {
            nodes: vec![0.0, 0.5, 1.1, 2.0],
        },
        Corollary::GeneralizedTaylor {
            a: 0.4,
            coeffs: vec![2.0, -1.0, 0.5, 1.0],
        },
        Corollary::Taylor { a: 0.5, n: 5 },
        Corollary::Hyperbolic { a1: 0.2, a2: 1.6 },
        Corollary::Trigonometric { a1: 0.3, a2: 1.8 },
        Corollary::Biharmonic { a1: 0.25, a2: 1.5 },
        Corollary::OddHyperbolic {
            a1: 0.1,
            a2: 0.9,
            a3: 1.9,
        },
        Corollary::OddTrigonometric {
            a1: 0.1,
            a2: 0.9,
            a3: 1.9,
        },
    ]
}

fn main_identity() -> Outcome {
    let mut r = rng(6);
    let (mut worst, mut converged) = (0.0f64, true);
    for case in corollaries() {
        for f in functions() {
            for _ in 0..20 {
                let x = r.random_range(-0.5..2.5);
                let rep = corollary_suite(&case, &f, x, 1e-10).unwrap();
                converged &= rep.converged;
                worst = worst.max(rep.residual / (1.0 + rep.true_value.norm()));
            }
        }
    }
    (
        worst <= 1e-7 && converged,
        format!("9 corollaries x 3 functions x 20 points, max residual/(1+|f|) {worst:.2e} (<= 1e-7), converged {converged}"),
    )
}

fn kernel_reproduction() -> Outcome {
    let mut r = rng(7);
    let (mut interp, mut off_node, mut integral, mut k_check) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..30 {
        let n = 1 + i % 6;
        let k = random_kernel(&mut r, n, 0.3, 1.0, i % 2 == 0, 2);
        let sys = random_system(&mut r, n, 0.0, 2.0);
        let basis = k.basis(&sys).unwrap();
        let w = random_kernel_element(&mut r, &k);
        let p = interpolate_values(&basis, node_values(&sys, &w));
        interp = interp.max(p.interpolation_residual(&sys));
        for _ in 0..10 {
            let x = r.random_range(-0.5..2.5);
            let (px, wx) = (p.evaluate(x), w.evaluate(x));
            off_node = off_node.max((px - wx).norm() / (1.0 + wx.norm()));
            k_check = k_check.max(
                1.0 + basis
                    .chis()
                    .iter()
                    .map(|c| c.evaluate(x).norm())
                    .sum::<f64>(),
            );
            let rep = reconstruct(&k.cs, &basis, &w, x, 1e-12).unwrap();
            integral = integral.max(rep.max_integral());
        }
    }
    (
        interp < 1e-10 && off_node < 1e-10 && integral < 1e-9,
        format!(
            "30 kernel elements, node residual {interp:.2e} (< 1e-10), off-node dev/(1+|f|) {off_node:.2e} (< 1e-10), max integral {integral:.2e} (< 1e-9), max K_check {k_check:.1e}"
        ),
    )
}

fn green_equivalence() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let n = 1 + i % 6;
        let sys = random_system(&mut r, n, 0.0, 2.0);
        let k = kernel_of(Operator::pure_derivative(n));
        let basis = StandardBasis::new(&k.op, &k.rd, &sys).unwrap();
        let gk = GreenKernel::new(&sys);
        for f in functions() {
            for _ in 0..5 {
                let x = r.random_range(-0.5..2.5);
                let per_node = reconstruct(&k.cs, &basis, &f, x, 1e-11).unwrap();
                let single = classical_reconstruct(&gk, &f, x, 1e-11).unwrap();
                let a = per_node.reconstructed - per_node.interpolant_value;
                let b = single.reconstructed - single.interpolant_value;
                worst = worst
                    .max((a - b).norm())
                    .max((per_node.reconstructed - single.reconstructed).norm());
            }
        }
    }
    (
        worst <= 1e-8,
        format!("10 systems, max remainder difference {worst:.2e} (<= 1e-8)"),
    )
}

fn run_cli(dir: &std::path::Path, name: &str, spec: &str, threads: &str) -> std::process::Output {
    let path = dir.join(name);
    std::fs::write(&path, spec).unwrap();
    Command::new(env!("CARGO_BIN_EXE_expinterp"))
        .arg("verify")
        .arg("--spec")
        .arg(&path)
        .env("EXPINTERP_THREADS", threads)
        .output()
        .unwrap()
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let fixed = r#"{
      "coefficients": [0.0, -1.0, 0.0, 1.0],
      "function": {"catalog": {"kind": "product", "factors": [{"kind": "polynomial", "coeffs": [0.0, 1.0]}, {"kind": "sin"}]}},
      "eval_points": [-0.4, 0.3, 1.2, 2.1],
      "corollary": {"corollary": "odd_hyperbolic", "a1": 0.1, "a2": 0.9, "a3": 1.9}
    }"#;
    let a = run_cli(dir.path(), "fixed.json", fixed, "1");
    let b = run_cli(dir.path(), "fixed.json", fixed, "4");
    let identical = a.status.code() == Some(0) && !a.stdout.is_empty() && a.stdout == b.stdout;

    let failures = [
        (
            "operator",
            r#"{"roots": [[1.0, 0.0, 1], [1.0000002, 0.0, 3]],
                "system": {"nodes": [0.0], "multiplicities": [4]},
                "function": {"catalog": {"kind": "exp"}}, "eval_points": [1.0]}"#,
            2,
        ),
        (
            "system",
            r#"{"coefficients": [1.0, 0.0, 1.0],
                "system": {"nodes": [0.0, 3.141592653589793], "multiplicities": [1, 1]},
                "function": {"catalog": {"kind": "exp"}}, "eval_points": [1.0]}"#,
            3,
        ),
        (
            "quadrature",
            r#"{"coefficients": [0.0, 1.0],
                "system": {"nodes": [0.0], "multiplicities": [1]},
                "function": {"catalog": {"kind": "sin", "sigma": 1e12}}, "eval_points": [1.0]}"#,
            4,
        ),
    ];
    let mut codes = Vec::new();
    let mut ok = identical;
    for (name, spec, want) in failures {
        let got = run_cli(dir.path(), &format!("{name}.json"), spec, "2")
            .status
            .code();
        ok &= got == Some(want);
        codes.push(format!("{name} {got:?}/{want}"));
    }
    (
        ok,
        format!(
            "byte-identical across runs {identical}, exit codes {}",
            codes.join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("characteristic solutions", characteristic_solutions),
        ("Kronecker identity", kronecker_identity),
        ("addition formula", addition_formula),
        ("standard basis", standard_basis),
        ("Wronskian closed forms", wronskians),
        ("main identity", main_identity),
        ("kernel reproduction", kernel_reproduction),
        ("Green-kernel equivalence", green_equivalence),
        ("CLI determinism and exit codes", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(out) => out,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failed += usize::from(!pass);
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} [{}] {name}: {detail} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
