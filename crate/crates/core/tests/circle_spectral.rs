use num_complex::Complex64 as C64;
use proptest::prelude::*;
use semiclassical::circle::*;
use semiclassical::fit::loglog_fit;
use semiclassical::phase_space::*;
use std::f64::consts::PI;

fn circle_n(hbar: f64) -> usize {
    (128.0 / hbar.sqrt()).log2().ceil().exp2() as usize
}

fn revived(hbar: f64, c: f64, eps: f64) -> WaveFunction {
    let spec = CoherentStateSpec::gaussian(0.0, 0.0, hbar).squeezed(eps);
    let psi0 = make_coherent_state(&spec, Grid::circle(circle_n(hbar))).unwrap();
    propagate_dispersion(&psi0, &DispersionLaw::cubic_quartic(c, 0.0), Time::Revivals(1.0)).unwrap()
}

/// Exact revival profile by Poisson summation of the cubic phase (d = 0).
fn poisson_airy(x: f64, c: f64, hbar: f64) -> C64 {
    let a = hbar / 2.0;
    let beta = 2.0 * PI * c * hbar;
    let w = (3.0 * beta).cbrt();
    let scale = (hbar / PI).powf(0.25) / (2.0 * PI).sqrt();
    let mut acc = 0.0;
    for k in -3..40 {
        let y = x + 2.0 * PI * k as f64;
        let arg = -(y - a * a / (3.0 * beta)) / w;
        let env = (2.0 * a.powi(3) / (27.0 * beta * beta) - a * y / (3.0 * beta)).exp();
        acc += scale * 2.0 * PI / w * env * semiclassical::special::airy_ai(arg);
    }
    C64::new(acc, 0.0)
}

#[test]
fn propagator_matches_poisson_formula() {
    let hbar = 1e-3;
    let psi = revived(hbar, 0.1, 0.0);
    let mut worst: f64 = 0.0;
    for k in (0..psi.grid.n).step_by(37) {
        let x = psi.grid.x(k);
        worst = worst.max((psi.values[k] - poisson_airy(x, 0.1, hbar)).norm());
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn airy_bulk_mismatch_decreases() {
    let hbars = [1e-3, 3e-4, 1e-4];
    let mut errs = Vec::new();
    for &hbar in &hbars {
        let psi = revived(hbar, 0.1, 0.0);
        let mut worst: f64 = 0.0;
        for k in 0..psi.grid.n {
            let x = psi.grid.x(k);
            if (PI / 2.0..=3.0 * PI / 2.0).contains(&x) {
                let p = airy_profile(x, 1, 0.1, 0.0, hbar, AiryRegime::Bulk).unwrap();
                worst = worst.max((psi.values[k] - p).norm());
            }
        }
        errs.push(worst);
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    let slope = loglog_fit(&hbars, &errs).slope;
    assert!(slope >= 0.3, "{slope} {errs:?}");
}

#[test]
fn airy_origin_matches_propagator() {
    let hbar = 1e-4;
    let psi = revived(hbar, 0.1, 0.0);
    let w = airy_width(1, 0.1, hbar);
    let peak = psi.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for k in 0..psi.grid.n {
        let x = psi.grid.x(k);
        let x = if x > PI { x - 2.0 * PI } else { x };
        if x.abs() < 2.0 * w {
            let p = airy_profile(x, 1, 0.1, 0.0, hbar, AiryRegime::Origin).unwrap() + airy_images(x, 1, 0.1, 0.0, hbar);
            assert!((psi.values[k] - p).norm() < 0.02 * peak, "x = {x}");
        }
    }
}

#[test]
fn delocalization_contrast() {
    let ratio = |c: f64| revived(1e-4, c, 0.0).ipr() / revived(1e-3, c, 0.0).ipr();
    assert!(ratio(0.1) <= 1.5, "{}", ratio(0.1));
    let hbars = [1e-3, 3e-4, 1e-4];
    let iprs: Vec<f64> = hbars.iter().map(|&h| revived(h, 0.0, 0.0).ipr()).collect();
    let slope = loglog_fit(&hbars, &iprs).slope;
    assert!((slope + 0.5).abs() < 0.1, "{slope}");
}

fn envelope_rate(psi: &WaveFunction) -> f64 {
    // local maxima of |ψ| on (0.1, 1) carry the exponential envelope
    let a: Vec<f64> = psi.values.iter().map(|v| v.norm()).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 1..a.len() - 1 {
        let x = psi.grid.x(k);
        if x > 0.1 && x < 1.0 && a[k] > a[k - 1] && a[k] >= a[k + 1] {
            xs.push(x);
            ys.push((a[k] * x.powf(0.25)).ln());
        }
    }
    -semiclassical::fit::linear_fit(&xs, &ys).slope
}

#[test]
fn squeezed_decay_rate_matches_localization_length() {
    let (c, eps, hbar) = (0.1, 0.3, 1e-3);
    let psi = revived(hbar, c, eps);
    let rate = envelope_rate(&psi);
    let expect = 1.0 / squeezed_length(1, c, eps, hbar);
    assert!((rate / expect - 1.0).abs() < 0.1, "{rate} vs {expect}");
    // finer grid reproduces the same state
    let spec = CoherentStateSpec::gaussian(0.0, 0.0, hbar).squeezed(eps);
    let fine = make_coherent_state(&spec, Grid::circle(4 * circle_n(hbar))).unwrap();
    let fine = propagate_dispersion(&fine, &DispersionLaw::cubic_quartic(c, 0.0), Time::Revivals(1.0)).unwrap();
    assert!((envelope_rate(&fine) - rate).abs() < 1e-2 * rate);
}

#[test]
fn hermite_examples() {
    use semiclassical::special::hermite_function;
    assert!((hermite_function(0, 0.0).unwrap() - 0.751_125_544_464_942_5).abs() < 1e-15);
    assert_eq!(hermite_function(1, 0.0).unwrap(), 0.0);
    // Gauss-Hermite with 60 nodes integrates H_3² = e^{-η²}·poly exactly
    let (x, w) = semiclassical::quad::gauss_legendre(400);
    let s: f64 = x.iter().zip(&w).map(|(x, w)| {
        let eta = 12.0 * x;
        12.0 * w * hermite_function(3, eta).unwrap().powi(2)
    }).sum();
    assert!((s - 1.0).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagation_is_unitary_and_composes(q in 0.0..6.28f64, p in -1.0..1.0f64, t1 in -50.0..50.0f64, t2 in -50.0..50.0f64, c in -0.5..0.5f64) {
        let hbar = 2e-2;
        let spec = CoherentStateSpec::gaussian(q, p, hbar);
        let f = make_coherent_state(&spec, Grid::circle(512)).unwrap();
        let law = DispersionLaw::cubic_quartic(c, 0.0);
        let a = propagate_dispersion(&f, &law, t1).unwrap();
        prop_assert!((a.norm() - f.norm()).abs() < 1e-12);
        let ab = propagate_dispersion(&a, &law, t2).unwrap();
        let direct = propagate_dispersion(&f, &law, t1 + t2).unwrap();
        let d = ab.values.iter().zip(&direct.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-10);
    }

    #[test]
    fn full_revivals_for_k_up_to_five(q in 0.0..6.28f64, k in 1u32..=5) {
        let hbar = 2.0 * PI / 1024.0;
        let f = make_coherent_state(&CoherentStateSpec::gaussian(q, 0.0, hbar), Grid::circle(1024)).unwrap();
        let g = propagate_dispersion(&f, &DispersionLaw::quadratic(), Time::Revivals(k as f64)).unwrap();
        prop_assert!((fidelity(&f, &g).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_period_density_symmetry(q in 0.0..6.28f64, t in 0.0..5.0f64) {
        let hbar = 2.0 * PI / 512.0;
        let n = 512;
        let f = make_coherent_state(&CoherentStateSpec::gaussian(q, 0.2, hbar), Grid::circle(n)).unwrap();
        let law = DispersionLaw::quadratic();
        let a = propagate_dispersion(&f, &law, t).unwrap();
        let b = propagate_dispersion(&f, &law, t + PI / hbar).unwrap();
        for k in 0..n {
            let shifted = (k + n / 2) % n;
            prop_assert!((a.values[k].norm_sqr() - b.values[shifted].norm_sqr()).abs() < 1e-8);
        }
    }

    #[test]
    fn gauss_weights_unitary(q in 1i64..=50, p in 1i64..200) {
        prop_assume!({ let (mut a, mut b) = (p, q); while b != 0 { let t = a % b; a = b; b = t; } a == 1 });
        let w = fractional_revival(p, q).unwrap();
        let s: f64 = w.weights.iter().map(|w| w.norm_sqr()).sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }
}
