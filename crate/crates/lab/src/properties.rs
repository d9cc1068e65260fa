//! Seeded spot checks of the structural properties of every module.

use crate::lattice::count_formula;
use crate::output::Check;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiclassical::circle::{propagate_dispersion, DispersionLaw};
use semiclassical::classical::{det, tangent_flow, HamiltonianSystem};
use semiclassical::metaplectic::{lct_apply, SymplecticMatrix2};
use semiclassical::phase_space::*;
use semiclassical::reconstruction::{enumerate_paths_with, LatticeModel};
use semiclassical::weyl::{harper_operator, split_step, torus_propagate};
use semiclassical::Result;

const BOUNDED: [&str; 6] = ["harmonic", "free", "double-well", "quartic", "pendulum", "harper"];
const ALL: [&str; 9] = ["harmonic", "free", "double-well", "quartic", "pendulum", "pendulum-rotated", "harper", "harper-rotated", "linear-hyperbolic"];

fn builtin(name: &str) -> HamiltonianSystem {
    HamiltonianSystem::builtin(name).expect("builtin system")
}

fn l2(a: &WaveFunction, b: &WaveFunction) -> f64 {
    (a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * a.grid.weight()).sqrt()
}

fn shifted_gaussian(y0: f64, k0: f64, width: f64) -> Result<SymbolFunction> {
    Ok(SymbolFunction::from_fn(Grid::symbol_default(), |y| C64::from_polar((-(y - y0).powi(2) / (2.0 * width * width)).exp(), k0 * y))?.normalized())
}

fn overlap(a: &SymbolFunction, b: &SymbolFunction) -> Result<f64> {
    let g = Grid::line(-16.0, 16.0, 2048)?;
    let (a, b) = (a.resample(g), b.resample(g));
    Ok(a.inner(&b)?.norm() / (a.norm() * b.norm()))
}

fn random_sl2(rng: &mut ChaCha8Rng) -> Result<SymplecticMatrix2> {
    let (a, b, c) = (rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    SymplecticMatrix2::new(a, b, c, (1.0 + b * c) / a)
}

/// Each entry records the worst deviation over `samples` random draws.
pub fn property_suite(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut push = |name: &str, worst: f64, tol: f64| checks.push(Check::new(10, name, worst <= tol, format!("worst {worst:.3e}, tolerance {tol:e}")));

    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x, p, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..10.0));
        for name in BOUNDED {
            let sys = builtin(name);
            // near-separatrix starts stretch exponentially and are covered by the open flows below
            if sys.h((x, p)).abs() < 0.05 && !matches!(name, "free" | "harmonic" | "quartic") {
                continue;
            }
            let tf = tangent_flow(&sys, (x, p), t, t / 2000.0)?;
            worst = tf.matrices.iter().map(|m| (det(m) - 1.0).abs()).fold(worst, f64::max);
        }
        let tf = tangent_flow(&builtin("linear-hyperbolic"), (x, p), t.min(8.0), 0.005)?;
        worst = worst.max((det(&tf.end()) - 1.0).abs());
    }
    push("symplecticity det dΦ = 1", worst, 1e-8);

    let mut worst: f64 = 0.0;
    let h = harper_operator(48)?;
    for _ in 0..samples {
        let hbar = 2e-2;
        let spec = CoherentStateSpec::gaussian(rng.gen_range(0.0..6.28), rng.gen_range(-1.0..1.0), hbar);
        let f = make_coherent_state(&spec, Grid::circle(512))?;
        let a = propagate_dispersion(&f, &DispersionLaw::cubic_quartic(rng.gen_range(-0.5..0.5), 0.0), rng.gen_range(-50.0..50.0))?;
        worst = worst.max((a.norm() - f.norm()).abs());
        let g = make_coherent_state(&CoherentStateSpec::gaussian(rng.gen_range(-0.8..0.8), rng.gen_range(-0.5..0.5), 1e-2), Grid::line(-3.0, 3.0, 1024)?)?;
        let out = split_step(&g, &|x| x * x * (x * x - 1.0), rng.gen_range(0.0..2.0), 1e-2)?;
        worst = worst.max((out.norm() - 1.0).abs());
        let mut psi: Vec<C64> = (0..48).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let s = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|v| *v /= s);
        let b = torus_propagate(&psi, &h, rng.gen_range(-3.0..3.0))?;
        worst = worst.max((b.iter().map(|v| v.norm_sqr()).sum::<f64>() - 1.0).abs());
    }
    push("propagator unitarity (circle, split-step, torus)", worst, 1e-10);

    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v: Vec<C64> = (0..1024).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut w = v.clone();
        semiclassical::fft::forward(&mut w);
        semiclassical::fft::inverse(&mut w);
        worst = v.iter().zip(&w).map(|(a, b)| (a - b / 1024.0).norm()).fold(worst, f64::max);
        let f = make_coherent_state(&CoherentStateSpec::gaussian(rng.gen_range(0.0..6.28), rng.gen_range(-1.0..1.0), 2e-2), Grid::circle(512))?;
        let back = from_fourier_side(&fourier_side(&f));
        worst = f.values.iter().zip(&back.values).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
    }
    push("Fourier round trips", worst, 1e-12);

    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (s1, s2) = (random_sl2(&mut rng)?, random_sl2(&mut rng)?);
        let a = shifted_gaussian(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.6..1.2))?;
        let two = lct_apply(&s2, &lct_apply(&s1, &a)?)?;
        let one = lct_apply(&s2.compose(&s1), &a)?;
        worst = worst.max(1.0 - overlap(&two, &one)?);
    }
    push("LCT composition fidelity", worst, 1e-6);

    let mut worst: f64 = 0.0;
    let e = 1e-5;
    for _ in 0..samples {
        let (x, p) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        for name in ALL {
            let sys = builtin(name);
            let rel = |fd: f64, exact: f64| (fd - exact).abs() / (1.0 + exact.abs());
            let g = sys.grad((x, p));
            worst = worst.max(rel((sys.h((x + e, p)) - sys.h((x - e, p))) / (2.0 * e), g.0));
            worst = worst.max(rel((sys.h((x, p + e)) - sys.h((x, p - e))) / (2.0 * e), g.1));
            let hs = sys.hess((x, p));
            let (gxp, gxm) = (sys.grad((x + e, p)), sys.grad((x - e, p)));
            let (gpp, gpm) = (sys.grad((x, p + e)), sys.grad((x, p - e)));
            worst = worst.max(rel((gxp.0 - gxm.0) / (2.0 * e), hs[0][0]));
            worst = worst.max(rel((gpp.0 - gpm.0) / (2.0 * e), hs[0][1]));
            worst = worst.max(rel((gpp.1 - gpm.1) / (2.0 * e), hs[1][1]));
        }
    }
    push("gradient and Hessian against finite differences", worst, 1e-6);

    let mut mismatches = 0.0;
    for m in [LatticeModel::Pendulum, LatticeModel::Harper] {
        for k in 0..=8 {
            let (fa, fn_) = count_formula(m, k);
            if enumerate_paths_with(m, k, false)?.len() as u64 != fa || enumerate_paths_with(m, k, true)?.len() as u64 != fn_ {
                mismatches += 1.0;
            }
        }
    }
    checks.push(Check::new(10, "path counts for n ≤ 8", mismatches == 0.0, format!("{mismatches} mismatches")));

    let hbar = 0.1;
    let f = make_coherent_state(&CoherentStateSpec::gaussian(1.0, 0.3, hbar), Grid::line(-6.0, 6.0, 512)?)?;
    let v = |x: f64| 0.5 * x * x + 0.1 * x.powi(4);
    let reference = split_step(&f, &v, 1.0, 1e-4)?;
    let ratio = l2(&split_step(&f, &v, 1.0, 0.02)?, &reference) / l2(&split_step(&f, &v, 1.0, 0.01)?, &reference);
    checks.push(Check::new(10, "split-step error ratio under step halving in [3.5, 4.5]", (3.5..=4.5).contains(&ratio), format!("{ratio:.4}")));
    Ok(checks)
}
