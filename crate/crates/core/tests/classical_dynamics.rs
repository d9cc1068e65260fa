use proptest::prelude::*;
use semiclassical::classical::*;

fn systems() -> Vec<HamiltonianSystem> {
    ["harmonic", "free", "double-well", "quartic", "pendulum", "pendulum-rotated", "harper", "harper-rotated", "linear-hyperbolic"]
        .iter()
        .map(|n| HamiltonianSystem::builtin(n).unwrap())
        .collect()
}

/// Bounded-stretch systems for long-time symplecticity checks.
fn bounded() -> Vec<HamiltonianSystem> {
    ["harmonic", "free", "double-well", "quartic", "pendulum", "harper"].iter().map(|n| HamiltonianSystem::builtin(n).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn derivatives_match_finite_differences(x in -1.5..1.5f64, p in -1.5..1.5f64) {
        let e = 1e-5;
        for sys in systems() {
            let g = sys.grad((x, p));
            let gx = (sys.h((x + e, p)) - sys.h((x - e, p))) / (2.0 * e);
            let gp = (sys.h((x, p + e)) - sys.h((x, p - e))) / (2.0 * e);
            prop_assert!((gx - g.0).abs() <= 1e-6 * (1.0 + g.0.abs()), "{} ∂x", sys.name);
            prop_assert!((gp - g.1).abs() <= 1e-6 * (1.0 + g.1.abs()), "{} ∂ξ", sys.name);
            let h = sys.hess((x, p));
            let fx = |q: f64| sys.grad((q, p));
            let fp = |q: f64| sys.grad((x, q));
            let hxx = (fx(x + e).0 - fx(x - e).0) / (2.0 * e);
            let hxp = (fp(p + e).0 - fp(p - e).0) / (2.0 * e);
            let hpp = (fp(p + e).1 - fp(p - e).1) / (2.0 * e);
            prop_assert!((hxx - h[0][0]).abs() <= 1e-6 * (1.0 + h[0][0].abs()), "{} hxx", sys.name);
            prop_assert!((hxp - h[0][1]).abs() <= 1e-6 * (1.0 + h[0][1].abs()), "{} hxξ", sys.name);
            prop_assert!((hpp - h[1][1]).abs() <= 1e-6 * (1.0 + h[1][1].abs()), "{} hξξ", sys.name);
            prop_assert_eq!(h[0][1], h[1][0]);
        }
    }

    #[test]
    fn tangent_flow_is_symplectic(x in -1.0..1.0f64, p in -1.0..1.0f64, t in 0.5..20.0f64) {
        for sys in bounded() {
            if sys.h((x, p)).abs() < 0.05 && sys.name != "free" && sys.name != "harmonic" && sys.name != "quartic" {
                continue;
            }
            let tf = tangent_flow(&sys, (x, p), t, t / 2000.0).unwrap();
            for m in &tf.matrices {
                prop_assert!((det(m) - 1.0).abs() < 1e-8, "{}: det {}", sys.name, det(m));
            }
        }
        let tf = tangent_flow(&HamiltonianSystem::linear_hyperbolic(), (x, p), t.min(8.0), 0.005).unwrap();
        prop_assert!((det(&tf.end()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flow_composes(x in -1.0..1.0f64, p in -1.0..1.0f64, t in 0.1..5.0f64, s in 0.1..5.0f64) {
        for sys in bounded() {
            let a = integrate_flow(&sys, (x, p), s, s / 500.0).unwrap();
            let b = integrate_flow(&sys, a.end(), t, t / 500.0).unwrap();
            let c = integrate_flow(&sys, (x, p), t + s, (t + s) / 1000.0).unwrap();
            let (e, f) = (b.end(), c.end());
            prop_assert!((e.0 - f.0).abs() < 1e-7 && (e.1 - f.1).abs() < 1e-7, "{}", sys.name);
            prop_assert!((a.end_action() + b.end_action() - c.end_action()).abs() < 1e-7, "{} action", sys.name);
        }
    }

    #[test]
    fn energy_is_conserved(x in -1.2..1.2f64, p in -1.2..1.2f64) {
        for sys in bounded() {
            let tr = integrate_flow(&sys, (x, p), 10.0, 0.01).unwrap();
            prop_assert!(tr.energy_drift() < 1e-8);
            prop_assert!(tr.max_step_error < 1e-8);
        }
    }

    #[test]
    fn mu_is_max_over_samples(t in 3.0..9.0f64) {
        let sys = HamiltonianSystem::linear_hyperbolic();
        let mu = estimate_mu(&sys, (0.0, 0.0), t).unwrap();
        let tf = tangent_flow(&sys, (0.0, 0.0), t, (t / 100.0).min(0.01)).unwrap();
        let direct = tf.times.iter().zip(&tf.matrices).skip(1).map(|(s, m)| norm2(m).ln() / s).fold(0.0, f64::max);
        prop_assert_eq!(mu, direct);
    }
}

#[test]
fn double_well_t0_step_halving() {
    let sys = HamiltonianSystem::double_well();
    let a = separatrix(&sys, Branch::Positive, SeparatrixOptions { ds: 4e-3, ..Default::default() }).unwrap();
    let b = separatrix(&sys, Branch::Positive, SeparatrixOptions { ds: 2e-3, ..Default::default() }).unwrap();
    let ta = compute_t0(&a, 4, 12).unwrap().t0;
    let tb = compute_t0(&b, 4, 12).unwrap().t0;
    assert!((ta - tb).abs() < 1e-4);
}

#[test]
fn separatrix_csv_has_header() {
    let c = separatrix(&HamiltonianSystem::double_well(), Branch::Positive, SeparatrixOptions::default()).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("s,x,xi\n"));
    let tr = integrate_flow(&HamiltonianSystem::harmonic(), (1.0, 0.0), 1.0, 0.01).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("t,x,xi,action,energy\n"));
}

#[test]
fn harper_separatrix_is_a_diagonal() {
    let c = separatrix(&HamiltonianSystem::harper(), Branch::Positive, SeparatrixOptions::default()).unwrap();
    for z in c.points.iter().step_by(100) {
        assert!((z.0 + z.1).abs() < 1e-8 || (z.0 - z.1).abs() < 1e-8, "{z:?}");
    }
    let e = c.end.origin;
    assert!((e.0.abs() - std::f64::consts::PI).abs() < 1e-9 && (e.1.abs() - std::f64::consts::PI).abs() < 1e-9);
}
