//! Metaplectic action on symbols, the fractional Fourier transform, and the
//! coherent-state approximant `e^{il(t)/ħ} ψ^{M(t)a}_{Φ^t(z)}`.

use crate::classical::{flow_with_tangent, integrate_flow, HamiltonianSystem, Mat2};
use crate::error::{Diagnosed, Error, Result, Warning};
use crate::fft;
use crate::fit::{loglog_fit, LineFit};
use crate::phase_space::{fidelity_distance, inner_product, make_coherent_state, CoherentStateSpec, Grid, SymbolFunction, WaveFunction};
use crate::weyl::SplitStep;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// `(x, ξ) ↦ (ax + bξ, cx + dξ)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticMatrix2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SymplecticMatrix2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() >= 1e-10 || !det.is_finite() {
            return Err(Error::InvalidArgument(format!("determinant {det} ≠ 1")));
        }
        Ok(SymplecticMatrix2 { a, b, c, d })
    }

    pub fn from_mat(m: &Mat2) -> Result<Self> {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn identity() -> Self {
        SymplecticMatrix2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Harmonic flow by angle `phi`.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        SymplecticMatrix2 { a: c, b: s, c: -s, d: c }
    }

    pub fn dilation(e: f64) -> Self {
        SymplecticMatrix2 { a: e, b: 0.0, c: 0.0, d: 1.0 / e }
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, o: &Self) -> Self {
        SymplecticMatrix2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn apply(&self, z: (f64, f64)) -> (f64, f64) {
        (self.a * z.0 + self.b * z.1, self.c * z.0 + self.d * z.1)
    }
}

struct Moments {
    y: f64,
    k: f64,
    sy: f64,
    sk: f64,
}

fn moments(a: &SymbolFunction) -> Moments {
    let ys = a.grid.points();
    let w: f64 = a.values.iter().map(|v| v.norm_sqr()).sum();
    let y: f64 = ys.iter().zip(&a.values).map(|(y, v)| y * v.norm_sqr()).sum::<f64>() / w;
    let mut f = a.values.clone();
    fft::forward(&mut f);
    let wk: f64 = f.iter().map(|v| v.norm_sqr()).sum();
    let k: f64 = a.grid.wave_numbers().iter().zip(&f).map(|(k, v)| k * v.norm_sqr()).sum::<f64>() / wk;
    let (vy, vk) = a.spreads();
    Moments { y, k, sy: vy.sqrt(), sk: vk.sqrt() }
}

const SPREAD_MARGIN: f64 = 14.0;
const MAX_SYMBOL_SAMPLES: usize = 1 << 16;

fn half_width(g: &Grid) -> f64 {
    g.start().abs().max((g.start() + g.length()).abs())
}

/// Grid able to hold a symbol with the given centroid and spreads.
fn grid_for(base: &Grid, y: f64, k: f64, sy: f64, sk: f64) -> Result<Grid> {
    let r = (y.abs() + SPREAD_MARGIN * sy).max(half_width(base));
    let kmax = k.abs() + SPREAD_MARGIN * sk;
    // keep cubic interpolation of the result as accurate as on the default grid
    let dx = base.dx().min(0.25 / kmax.max(1e-300));
    let needed = (2.0 * r / dx).ceil() as usize;
    let n = needed.next_power_of_two().max(base.n);
    if n > MAX_SYMBOL_SAMPLES {
        return Err(Error::GridTooCoarse(format!("transformed symbol needs {needed} samples")));
    }
    if r <= half_width(base) && n == base.n && base.start() == -half_width(base) {
        return Ok(*base);
    }
    Grid::line(-r, r, n)
}

/// Trigonometric interpolant of the samples at arbitrary points (zero outside the window).
fn spectral_eval(a: &SymbolFunction, ys: &[f64]) -> Vec<C64> {
    let n = a.grid.n;
    let mut c = a.values.clone();
    fft::forward(&mut c);
    let ks = a.grid.wave_numbers();
    let x0 = a.grid.start();
    let end = x0 + a.grid.length();
    ys.iter()
        .map(|&y| {
            if y < x0 || y >= end {
                return C64::new(0.0, 0.0);
            }
            let mut s = C64::new(0.0, 0.0);
            for (k, (ck, kk)) in c.iter().zip(&ks).enumerate() {
                let ph = if n % 2 == 0 && k == n / 2 { C64::new((kk * (y - x0)).cos(), 0.0) } else { C64::from_polar(1.0, kk * (y - x0)) };
                s += ck * ph;
            }
            s / n as f64
        })
        .collect()
}

/// `∫ g(y) e^{i(a y² - 2 y y' + d y'²)/(2b)} dy / √(2πib)` on the output grid.
fn chirp_fourier(g: &SymbolFunction, a: f64, b: f64, d: f64, out: Grid) -> Vec<C64> {
    let dx = g.grid.dx();
    let peak = g.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..g.grid.n).filter(|&j| g.values[j].norm() > 1e-18 * peak).collect();
    if keep.is_empty() {
        return vec![C64::new(0.0, 0.0); out.n];
    }
    let (j0, j1) = (keep[0], *keep.last().unwrap());
    let y0 = g.grid.x(j0);
    let h: Vec<C64> = (j0..=j1)
        .map(|j| {
            let y = g.grid.x(j);
            g.values[j] * C64::from_polar(dx, a * y * y / (2.0 * b))
        })
        .collect();
    let pref = 1.0 / (C64::new(0.0, 2.0 * PI * b)).sqrt();
    out.points()
        .into_iter()
        .map(|yp| {
            let w = C64::from_polar(1.0, -dx * yp / b);
            let mut e = C64::from_polar(1.0, -y0 * yp / b);
            let mut s = C64::new(0.0, 0.0);
            for hj in &h {
                s += hj * e;
                e *= w;
            }
            pref * s * C64::from_polar(1.0, d * yp * yp / (2.0 * b))
        })
        .collect()
}

/// Metaplectic image of `S` acting on a symbol at unit Planck constant, up to a global sign.
pub fn lct_apply(s: &SymplecticMatrix2, a: &SymbolFunction) -> Result<SymbolFunction> {
    SymplecticMatrix2::new(s.a, s.b, s.c, s.d)?;
    if *s == SymplecticMatrix2::identity() {
        return Ok(a.clone());
    }
    let m = moments(a);
    let sy_out = (s.a * s.a * m.sy * m.sy + s.b * s.b * m.sk * m.sk).sqrt();
    let sk_out = (s.c * s.c * m.sy * m.sy + s.d * s.d * m.sk * m.sk).sqrt();
    let (y_out, k_out) = s.apply((m.y, m.k));
    let out = grid_for(&a.grid, y_out, k_out, sy_out, sk_out)?;

    if s.b.abs() <= 1e-12 {
        if s.a.abs() < 1e-12 {
            return Err(Error::DegenerateDecomposition(format!("{s:?}")));
        }
        let ys = out.points();
        let scaled: Vec<f64> = ys.iter().map(|y| y / s.a).collect();
        let base = spectral_eval(a, &scaled);
        let amp = 1.0 / s.a.abs().sqrt();
        let values = ys.iter().zip(base).map(|(y, v)| v * C64::from_polar(amp, s.c * y * y / (2.0 * s.a))).collect();
        return SymbolFunction::new(out, values);
    }

    let r_in = m.y.abs() + SPREAD_MARGIN * m.sy;
    let k_in = m.k.abs() + SPREAD_MARGIN * m.sk;
    let nyquist = PI / a.grid.dx();
    let k_tot = (s.a / s.b).abs() * r_in + k_in;
    let r_out = half_width(&out);
    if k_tot < 0.9 * nyquist && r_out / s.b.abs() < 2.0 * nyquist - k_tot {
        return SymbolFunction::new(out, chirp_fourier(a, s.a, s.b, s.d, out));
    }
    // rotate first so that the input chirp vanishes
    let phi = (-s.a).atan2(s.b);
    let work = rotation_grid(r_in.max(k_in))?;
    let g = SymbolFunction::new(work, spectral_eval(a, &work.points()))?;
    let g = hermite_rotate(-phi, &g)?.value;
    let (sn, cs) = phi.sin_cos();
    let b2 = -s.a * sn + s.b * cs;
    let d2 = -s.c * sn + s.d * cs;
    SymbolFunction::new(out, chirp_fourier(&g, 0.0, b2, d2, out))
}

/// Square window `[-r, r)` resolving wave numbers up to `r`, so it holds every rotation of the symbol.
fn rotation_grid(r: f64) -> Result<Grid> {
    let r = r.max(8.0);
    let n = ((4.0 * r * r / PI).ceil() as usize).next_power_of_two().max(128);
    if n > 4096 {
        return Err(Error::GridTooCoarse(format!("rotation window of half-width {r:.1} needs {n} samples")));
    }
    Grid::line(-r, r, n)
}

struct OscillatorBasis {
    vectors: DMatrix<f64>,
    /// Number of leading modes whose discrete eigenvalue matches `2j + 1`.
    valid: usize,
}

type BasisKey = (usize, u64, u64);

fn basis_cache() -> &'static Mutex<HashMap<BasisKey, Arc<OscillatorBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<BasisKey, Arc<OscillatorBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Eigenbasis of the spectrally discretized `-d²/dη² + η²` on a symbol grid.
fn oscillator_basis(grid: &Grid) -> Arc<OscillatorBasis> {
    let key = (grid.n, grid.start().to_bits(), grid.length().to_bits());
    if let Some(b) = basis_cache().lock().unwrap().get(&key) {
        return b.clone();
    }
    let n = grid.n;
    let mut c: Vec<C64> = grid.wave_numbers().into_iter().map(|k| C64::new(k * k, 0.0)).collect();
    fft::inverse(&mut c);
    let ys = grid.points();
    let h = DMatrix::from_fn(n, n, |i, j| {
        let lap = c[(i + n - j) % n].re / n as f64;
        lap + if i == j { ys[i] * ys[i] } else { 0.0 }
    });
    let e = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| e.eigenvalues[x].partial_cmp(&e.eigenvalues[y]).unwrap());
    let vectors = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    let valid = order
        .iter()
        .enumerate()
        .position(|(j, &k)| (e.eigenvalues[k] - (2 * j + 1) as f64).abs() > 1e-6 * (2 * j + 1) as f64)
        .unwrap_or(n);
    let b = Arc::new(OscillatorBasis { vectors, valid });
    basis_cache().lock().unwrap().insert(key, b.clone());
    b
}

fn hermite_rotate(theta: f64, a: &SymbolFunction) -> Result<Diagnosed<SymbolFunction>> {
    let basis = oscillator_basis(&a.grid);
    let v = &basis.vectors;
    let n = a.grid.n;
    let mut coef = vec![C64::new(0.0, 0.0); n];
    for (j, cj) in coef.iter_mut().enumerate() {
        let col = v.column(j);
        *cj = col.iter().zip(&a.values).map(|(p, x)| x * *p).sum();
    }
    let total: f64 = coef.iter().map(|c| c.norm_sqr()).sum();
    let tail: f64 = coef[basis.valid.min(n)..].iter().map(|c| c.norm_sqr()).sum::<f64>() / total.max(1e-300);
    for (j, cj) in coef.iter_mut().enumerate() {
        *cj *= C64::from_polar(1.0, theta * (j as f64 + 0.5));
    }
    let mut values = vec![C64::new(0.0, 0.0); n];
    for (j, cj) in coef.iter().enumerate() {
        if cj.norm_sqr() == 0.0 {
            continue;
        }
        for (i, out) in values.iter_mut().enumerate() {
            *out += cj * v[(i, j)];
        }
    }
    let mut warnings = Vec::new();
    if tail > 1e-8 {
        warnings.push(Warning::Truncation { context: "fractional Fourier", mass: tail });
    }
    Ok(Diagnosed { value: SymbolFunction::new(a.grid, values)?, warnings })
}

/// `e^{i(θ/2)(-d²/dη² + η²)} a`: Hermite coefficient `j` picks up `e^{iθ(j+1/2)}`.
pub fn fractional_fourier(theta: f64, a: &SymbolFunction) -> Result<Diagnosed<SymbolFunction>> {
    a.check_normalized()?;
    if theta == 0.0 {
        return Ok(Diagnosed::clean(a.clone()));
    }
    hermite_rotate(theta, a)
}

/// `M̃_θ a` with the exact phase `e^{iθ(j+1/2)}` on Hermite mode `j`, for any
/// (not necessarily normalized) symbol; the result stays on the input grid.
pub fn metaplectic_rotation(theta: f64, a: &SymbolFunction) -> Result<Diagnosed<SymbolFunction>> {
    let turns = ((theta + PI) / (2.0 * PI)).floor();
    let th = theta - 2.0 * PI * turns;
    let sign = if turns as i64 % 2 == 0 { 1.0 } else { -1.0 };
    if th.abs() < 1e-14 {
        return Ok(Diagnosed::clean(a.scale(C64::new(sign, 0.0))));
    }
    let (sn, cs) = th.sin_cos();
    let peak = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Diagnosed::clean(a.clone()));
    }
    let m = moments(a);
    let r_in = m.y.abs() + SPREAD_MARGIN * m.sy;
    let k_in = m.k.abs() + SPREAD_MARGIN * m.sk;
    let nyquist = PI / a.grid.dx();
    let k_tot = (cs / sn).abs() * r_in + k_in;
    if sn.abs() > 0.1 && k_tot < 0.9 * nyquist && half_width(&a.grid) / sn.abs() < 2.0 * nyquist - k_tot {
        let values = chirp_fourier(a, cs, -sn, cs, a.grid).into_iter().map(|v| v * sign).collect();
        return Ok(Diagnosed::clean(SymbolFunction::new(a.grid, values)?));
    }
    let mut r = hermite_rotate(th, a)?;
    if sign < 0.0 {
        r.value = r.value.scale(C64::new(-1.0, 0.0));
    }
    Ok(r)
}

/// Semiclassical approximant at time `t`.
#[derive(Clone, Debug)]
pub struct SemiclassicalApproximant {
    pub center: (f64, f64),
    /// `(l(t) - (ξ_t x_t - ξ_0 x_0)) / ħ`, the phase matching `e^{ipx/ħ}` coherent states.
    pub phase: f64,
    pub evolved_symbol: SymbolFunction,
    pub tangent: SymplecticMatrix2,
}

fn trajectory_step(t: f64) -> f64 {
    if t == 0.0 {
        1e-3
    } else {
        (t.abs() / 100.0).min(2e-3)
    }
}

/// Classical data and `M(t)a` for a coherent state launched at `(q, p)`.
pub fn approximant_data(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64) -> Result<SemiclassicalApproximant> {
    spec.symbol.check_normalized()?;
    let (traj, tf) = flow_with_tangent(sys, (spec.q, spec.p), t, trajectory_step(t))?;
    let s = SymplecticMatrix2::from_mat(&tf.end())?;
    // the symbol is scaled by √ħ_eff rather than √ħ
    let lam2 = spec.hbar_eff() / spec.hbar;
    let s_eff = SymplecticMatrix2 { a: s.a, b: s.b / lam2, c: s.c * lam2, d: s.d };
    let evolved = lct_apply(&s_eff, &spec.symbol)?;
    let n = evolved.norm();
    let evolved = if (n - 1.0).abs() > 1e-12 { evolved.normalized() } else { evolved };
    let (x, xi) = traj.end();
    let phase = (traj.end_action() - (xi * x - spec.p * spec.q)) / spec.hbar;
    Ok(SemiclassicalApproximant { center: (x, xi), phase, evolved_symbol: evolved, tangent: s })
}

impl SemiclassicalApproximant {
    pub fn wave_function(&self, spec: &CoherentStateSpec, grid: Grid) -> Result<WaveFunction> {
        let moved = CoherentStateSpec {
            q: self.center.0,
            p: self.center.1,
            symbol: self.evolved_symbol.clone(),
            hbar: spec.hbar,
            squeeze: spec.squeeze,
        };
        let mut f = make_coherent_state(&moved, grid)?;
        let ph = C64::from_polar(1.0, self.phase);
        f.values.iter_mut().for_each(|v| *v *= ph);
        Ok(f)
    }
}

/// `e^{il(t)/ħ} ψ^{M(t)a}_{Φ^t(q,p)}` sampled on `grid`, normalized.
pub fn build_approximant(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, grid: Grid) -> Result<WaveFunction> {
    approximant_data(sys, spec, t)?.wave_function(spec, grid)
}

/// `M(t)a` by integrating `i∂_t b = (κ(-∂²) + V''(x_t) y²/2) b` along the trajectory.
/// Keeps the metaplectic sign that the endpoint construction leaves undetermined.
pub fn metaplectic_ode(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, dt: f64) -> Result<SymbolFunction> {
    let (kappa, v) = sys
        .kinetic_potential_parts()
        .ok_or_else(|| Error::UnsupportedSymbolForm(format!("{} is not of the form κξ² + V(x)", sys.name)))?;
    let n = (t.abs() / dt).ceil().max(1.0) as usize;
    let tau = t / n as f64;
    let traj = integrate_flow(sys, (spec.q, spec.p), t, tau / 2.0)?;
    let h2 = 1e-4;
    let vpp = |x: f64| (v(x + h2) - 2.0 * v(x) + v(x - h2)) / (h2 * h2);
    let data = approximant_data(sys, spec, t)?;
    let mg = moments(&data.evolved_symbol);
    let grid = grid_for(&spec.symbol.grid, mg.y, mg.k, mg.sy, mg.sk)?;
    let lam2 = spec.hbar_eff() / spec.hbar;
    let mut b = spec.symbol.resample(grid).values;
    let ks = grid.wave_numbers();
    let ys = grid.points();
    let inv_n = 1.0 / grid.n as f64;
    // symbol variable is scaled by √ħ_eff: kinetic weight 1/λ², quadratic potential weight λ²
    let kin: Vec<C64> = ks.iter().map(|k| C64::from_polar(inv_n, -tau * kappa * k * k / lam2)).collect();
    for step in 0..n {
        let xm = traj.points[2 * step + 1].0;
        let w = 0.5 * vpp(xm) * lam2;
        for (bv, y) in b.iter_mut().zip(&ys) {
            *bv *= C64::from_polar(1.0, -0.5 * tau * w * y * y);
        }
        fft::forward(&mut b);
        b.iter_mut().zip(&kin).for_each(|(x, k)| *x *= k);
        fft::inverse(&mut b);
        for (bv, y) in b.iter_mut().zip(&ys) {
            *bv *= C64::from_polar(1.0, -0.5 * tau * w * y * y);
        }
    }
    SymbolFunction::new(grid, b)
}

/// Reference propagation settings for error experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceOptions {
    pub x_min: f64,
    pub x_max: f64,
    pub dt: f64,
    /// Extra factor on the automatically chosen sample count.
    pub refine: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions { x_min: -2.5, x_max: 2.5, dt: 1e-3, refine: 1 }
    }
}

/// Line grid resolving both `√ħ` and the largest momentum reached up to time `t`.
pub fn reference_grid(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, opts: &ReferenceOptions) -> Result<Grid> {
    let traj = integrate_flow(sys, (spec.q, spec.p), t.max(1e-2), trajectory_step(t.max(1e-2)))?;
    let xi_max = traj.points.iter().map(|z| z.1.abs()).fold(0.0, f64::max) + 8.0 * spec.hbar_eff().sqrt().max(spec.hbar / spec.hbar_eff().sqrt());
    let len = opts.x_max - opts.x_min;
    let by_width = len / (spec.hbar_eff().sqrt() / 16.0);
    let by_momentum = len * xi_max / (0.5 * PI * spec.hbar);
    let n = (by_width.max(by_momentum).ceil() as usize).next_power_of_two() * opts.refine.max(1);
    Grid::line(opts.x_min, opts.x_max, n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhrenfestRow {
    pub hbar: f64,
    /// Phase-insensitive distance `min_φ ‖ψ - e^{iφ}ψ_approx‖`.
    pub error: f64,
    /// Plain `‖ψ - ψ_approx‖` with the sign fixed by the operator ODE.
    pub phase_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestReport {
    pub rows: Vec<EhrenfestRow>,
    pub fit: Option<LineFit>,
    /// All errors below `1e-6`: the approximation is exact and the slope is meaningless.
    pub exact: bool,
}

impl EhrenfestReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "hbar,error,slope")?;
        let slope = match (&self.fit, self.exact) {
            (_, true) => "exact".to_string(),
            (Some(f), false) => format!("{:.6}", f.slope),
            (None, false) => String::new(),
        };
        for r in &self.rows {
            writeln!(w, "{:.6e},{:.6e},{}", r.hbar, r.error, slope)?;
        }
        Ok(())
    }
}

/// Exact reference state `e^{-itĤ/ħ}ψ` on the reference grid.
pub fn reference_state(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, opts: &ReferenceOptions) -> Result<WaveFunction> {
    let (kappa, v) = sys
        .kinetic_potential_parts()
        .ok_or_else(|| Error::UnsupportedSymbolForm(format!("{} has no split-step quantization", sys.name)))?;
    let grid = reference_grid(sys, spec, t, opts)?;
    let psi0 = make_coherent_state(spec, grid)?;
    crate::weyl::split_step_kinetic(&psi0, kappa, &|x| v(x), t, opts.dt)
}

/// Error of the approximant at one `ħ`.
pub fn approximant_error(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, opts: &ReferenceOptions, phase_sensitive: bool) -> Result<EhrenfestRow> {
    let exact = reference_state(sys, spec, t, opts)?;
    let data = approximant_data(sys, spec, t)?;
    let approx = data.wave_function(spec, exact.grid)?;
    let error = fidelity_distance(&exact, &approx)?;
    let phase_error = if phase_sensitive {
        let mut d = data.clone();
        d.evolved_symbol = metaplectic_ode(sys, spec, t, opts.dt)?;
        let ps = d.wave_function(spec, exact.grid)?;
        let ov = inner_product(&exact, &ps)?;
        Some((2.0 - 2.0 * ov.re).max(0.0).sqrt())
    } else {
        None
    };
    Ok(EhrenfestRow { hbar: spec.hbar, error, phase_error })
}

/// `E(ħ)` over a sweep and the fitted slope of `log E` against `log ħ`.
pub fn ehrenfest_experiment(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t: f64, hbars: &[f64], opts: &ReferenceOptions, phase_sensitive: bool) -> Result<EhrenfestReport> {
    if hbars.len() < 3 {
        return Err(Error::InvalidArgument("need at least three ħ values".into()));
    }
    let lo = hbars.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hbars.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::InvalidArgument("ħ values must span at least 1.5 decades".into()));
    }
    let mut rows = Vec::new();
    for &h in hbars {
        let s = CoherentStateSpec { hbar: h, ..spec.clone() };
        rows.push(approximant_error(sys, &s, t, opts, phase_sensitive)?);
    }
    let exact = rows.iter().all(|r| r.error < 1e-6);
    let fit = if exact {
        None
    } else {
        let hs: Vec<f64> = rows.iter().map(|r| r.hbar).collect();
        let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
        Some(loglog_fit(&hs, &es))
    };
    Ok(EhrenfestReport { rows, fit, exact })
}

/// `E(t)` at fixed `ħ` for increasing times, advancing one reference propagation.
pub fn error_vs_time(sys: &HamiltonianSystem, spec: &CoherentStateSpec, times: &[f64], opts: &ReferenceOptions) -> Result<Vec<(f64, f64)>> {
    scan_errors(sys, spec, times, opts, None)
}

fn scan_errors(sys: &HamiltonianSystem, spec: &CoherentStateSpec, times: &[f64], opts: &ReferenceOptions, stop_above: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let (kappa, v) = sys
        .kinetic_potential_parts()
        .ok_or_else(|| Error::UnsupportedSymbolForm(format!("{} has no split-step quantization", sys.name)))?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let grid = reference_grid(sys, spec, t_max, opts)?;
    let mut psi = make_coherent_state(spec, grid)?;
    let mut stepper = SplitStep::new(grid, spec.hbar, kappa, &|x| v(x), opts.dt);
    let mut now = 0.0;
    let mut out = Vec::new();
    for &t in times {
        if t < now - 1e-12 {
            return Err(Error::InvalidArgument("times must be increasing".into()));
        }
        let steps = ((t - now) / opts.dt).round() as usize;
        stepper.advance(&mut psi.values, steps);
        now += steps as f64 * opts.dt;
        let approx = build_approximant(sys, spec, now, grid)?;
        let e = fidelity_distance(&psi, &approx)?;
        out.push((now, e));
        if stop_above.is_some_and(|th| e > th) {
            break;
        }
    }
    Ok(out)
}

/// First sampled time at which `E(t)` exceeds `threshold`.
pub fn breakdown_time(sys: &HamiltonianSystem, spec: &CoherentStateSpec, t_max: f64, samples: usize, threshold: f64, opts: &ReferenceOptions) -> Result<Option<f64>> {
    let times: Vec<f64> = (1..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
    let errs = scan_errors(sys, spec, &times, opts, Some(threshold))?;
    Ok(errs.into_iter().find(|(_, e)| *e > threshold).map(|(t, _)| t))
}
