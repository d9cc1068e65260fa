//! Exact spectral propagation on the circle for momentum-diagonal Hamiltonians.

use crate::dd::Dd;
use crate::error::{Diagnosed, Error, Result, Warning};
use crate::fft;
use crate::phase_space::{fourier_side, from_fourier_side, CoherentStateSpec, GridKind, WaveFunction};
use crate::special::{airy_ai, airy_ai_neg_leading, hermite_all};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

const INV_TWO_PI: Dd = Dd { hi: 0.15915494309189535, lo: -9.839338337591243e-18 };

#[derive(Clone)]
pub enum DispersionLaw {
    /// `h(ξ) = Σ_k coeffs[k] ξ^k`.
    Polynomial(Vec<f64>),
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for DispersionLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DispersionLaw::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            DispersionLaw::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl DispersionLaw {
    /// `h(ξ) = ξ²`; the quantum period of this law is `2π/ħ`.
    pub fn quadratic() -> Self {
        DispersionLaw::Polynomial(vec![0.0, 0.0, 1.0])
    }

    /// `h(ξ) = ξ² + cξ³ + dξ⁴`.
    pub fn cubic_quartic(c: f64, d: f64) -> Self {
        DispersionLaw::Polynomial(vec![0.0, 0.0, 1.0, c, d])
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            DispersionLaw::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * xi + ck),
            DispersionLaw::Callable(f) => f(xi),
        }
    }
}

/// Propagation time, either absolute or as a multiple `r` of `2π/ħ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Time {
    Absolute(f64),
    Revivals(f64),
}

impl Time {
    pub fn value(&self, hbar: f64) -> f64 {
        match *self {
            Time::Absolute(t) => t,
            Time::Revivals(r) => r * 2.0 * PI / hbar,
        }
    }
}

impl From<f64> for Time {
    fn from(t: f64) -> Self {
        Time::Absolute(t)
    }
}

pub fn quantum_period(hbar: f64) -> f64 {
    2.0 * PI / hbar
}

/// Phase `t h(nħ)/ħ` measured in turns, reduced to `[0, 1)`.
fn phase_turns(law: &DispersionLaw, n: i64, hbar: f64, t: Time) -> Result<f64> {
    match law {
        DispersionLaw::Polynomial(coeffs) => {
            // Σ c_k n^k ħ^{k-e}, e = 1 for absolute times and 2 for revival units
            let e = match t {
                Time::Absolute(_) => 1,
                Time::Revivals(_) => 2,
            };
            let nd = Dd::from_i128(n as i128);
            let h = Dd::new(hbar);
            let mut acc = Dd::ZERO;
            for (k, &ck) in coeffs.iter().enumerate() {
                if ck == 0.0 {
                    continue;
                }
                let mut term = Dd::new(ck);
                for _ in 0..k {
                    term = term.mul(nd);
                }
                let p = k as i32 - e;
                if p > 0 {
                    for _ in 0..p {
                        term = term.mul(h);
                    }
                } else {
                    for _ in 0..(-p) {
                        term = Dd::new(term.hi / hbar).add(Dd::new(term.lo / hbar)).add(residual_div(term.hi, hbar));
                    }
                }
                acc = acc.add(term);
            }
            let turns = match t {
                Time::Absolute(tv) => acc.mul_f64(tv).mul(INV_TWO_PI),
                Time::Revivals(r) => acc.mul_f64(r),
            };
            if turns.hi.abs() > 1e25 {
                return Err(Error::PhasePrecisionLoss(turns.hi * 2.0 * PI));
            }
            Ok(turns.fract())
        }
        DispersionLaw::Callable(f) => {
            let phase = t.value(hbar) * f(n as f64 * hbar) / hbar;
            if !phase.is_finite() || phase.abs() * f64::EPSILON > 1e-6 {
                return Err(Error::PhasePrecisionLoss(phase));
            }
            Ok((phase / (2.0 * PI)).rem_euclid(1.0))
        }
    }
}

/// Rounding error of `a / b` as a double, recovered with a fused multiply-add.
fn residual_div(a: f64, b: f64) -> Dd {
    let q = a / b;
    let r = (-q).mul_add(b, a);
    Dd::new(r / b)
}

/// Multiply each Fourier coefficient `c_n` by `e^{-i t h(nħ)/ħ}`.
pub fn propagate_dispersion(f: &WaveFunction, law: &DispersionLaw, t: impl Into<Time>) -> Result<WaveFunction> {
    if f.grid.kind != GridKind::Circle {
        return Err(Error::GridMismatch("propagate_dispersion needs a circle grid".into()));
    }
    let t = t.into();
    let mut side = fourier_side(f);
    let n = f.grid.n;
    for k in 0..n {
        let m = fft::freq_index(k, n);
        let turns = phase_turns(law, m, f.hbar, t)?;
        side.coeffs[k] *= C64::from_polar(1.0, -2.0 * PI * turns);
    }
    Ok(from_fourier_side(&side))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RevivalPrediction {
    pub sites: Vec<f64>,
    pub weights: Vec<C64>,
    /// `t_{p/q}` in units of `2π/ħ`.
    pub revivals: f64,
}

impl RevivalPrediction {
    pub fn time(&self, hbar: f64) -> f64 {
        self.revivals * 2.0 * PI / hbar
    }

    /// `Σ_j w_j ψ(x - x_j)` evaluated by exact Fourier translation.
    pub fn superpose(&self, psi0: &WaveFunction) -> WaveFunction {
        let side = fourier_side(psi0);
        let n = psi0.grid.n;
        let mut out = side.clone();
        for k in 0..n {
            let m = fft::freq_index(k, n) as f64;
            let f: C64 = self.sites.iter().zip(&self.weights).map(|(x, w)| w * C64::from_polar(1.0, -m * x)).sum();
            out.coeffs[k] = side.coeffs[k] * f;
        }
        from_fourier_side(&out)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Gauss-sum weights of the `q`-site revival at `t = (p/q)·2π/ħ` for `h = ξ²`.
pub fn fractional_revival(p: i64, q: i64) -> Result<RevivalPrediction> {
    if q < 1 {
        return Err(Error::InvalidArgument(format!("q = {q} must be positive")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    let qq = q as i128;
    // f(k) = e^{-2πi (p/q) k²}, computed with exact integer reduction
    let f: Vec<C64> = (0..qq)
        .map(|k| {
            let r = ((p as i128) * k * k).rem_euclid(qq);
            C64::from_polar(1.0, -2.0 * PI * r as f64 / q as f64)
        })
        .collect();
    let weights = (0..qq)
        .map(|j| {
            f.iter()
                .enumerate()
                .map(|(k, fk)| {
                    let r = (j * k as i128).rem_euclid(qq);
                    fk * C64::from_polar(1.0, 2.0 * PI * r as f64 / q as f64)
                })
                .sum::<C64>()
                / q as f64
        })
        .collect();
    let sites = (0..q).map(|j| 2.0 * PI * j as f64 / q as f64).collect();
    Ok(RevivalPrediction { sites, weights, revivals: p as f64 / q as f64 })
}

/// The coherent-state superposition predicted at the fractional revival.
pub fn fractional_revival_state(pred: &RevivalPrediction, spec: &CoherentStateSpec, grid: crate::phase_space::Grid) -> Result<WaveFunction> {
    let psi0 = crate::phase_space::make_coherent_state(spec, grid)?;
    Ok(pred.superpose(&psi0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AiryRegime {
    Bulk,
    Origin,
}

/// Airy scale `(6π s c ħ)^{1/3}` of the revival profile near the origin.
pub fn airy_width(s: u32, c: f64, hbar: f64) -> f64 {
    (6.0 * PI * s as f64 * c * hbar).cbrt()
}

/// Normalization of the Fourier coefficients of the unsqueezed Gaussian at the origin.
fn gaussian_coefficient_scale(hbar: f64) -> f64 {
    (hbar / PI).powf(0.25) / (2.0 * PI).sqrt()
}

/// Leading asymptotics of the revival profile at `t = s·2π/ħ` for `h = ξ² + cξ³ + dξ⁴`
/// and an unsqueezed Gaussian packet started at the origin.
pub fn airy_profile(x: f64, s: u32, c: f64, d: f64, hbar: f64, regime: AiryRegime) -> Result<C64> {
    if c == 0.0 || s < 1 {
        return Err(Error::InvalidArgument("airy_profile needs c ≠ 0 and s ≥ 1".into()));
    }
    let w = airy_width(s, c.abs(), hbar);
    let amp = 2.0 * PI * gaussian_coefficient_scale(hbar) / w;
    let sgn = c.signum();
    match regime {
        AiryRegime::Origin => {
            if x.abs() > 8.0 * w {
                return Err(Error::RegimeMismatch(format!("|x| = {} outside the origin window {}", x.abs(), 8.0 * w)));
            }
            Ok(C64::new(amp * airy_ai(-sgn * x / w), 0.0))
        }
        AiryRegime::Bulk => {
            if !(x > 0.0 && x <= 2.0 * PI) {
                return Err(Error::RegimeMismatch(format!("bulk regime needs 0 < x ≤ 2π, got {x}")));
            }
            let sf = s as f64;
            let damping = 1.0 / (12.0 * PI * sf * c.abs());
            let mut acc = C64::new(0.0, 0.0);
            for k in 0.. {
                let y = if sgn > 0.0 { x + 2.0 * PI * k as f64 } else { 2.0 * PI * (k + 1) as f64 - x };
                let env = amp * (-damping * y).exp();
                if env < 1e-12 {
                    break;
                }
                let quartic = C64::from_polar(1.0, -d * y * y / (18.0 * PI * sf * c * c));
                acc += quartic * env * airy_ai_neg_leading(y / w);
            }
            Ok(acc)
        }
    }
}

/// Wrap-around contributions `y = x + 2πk`, `k ≥ 1`, missing from the origin form.
pub fn airy_images(x: f64, s: u32, c: f64, d: f64, hbar: f64) -> C64 {
    let w = airy_width(s, c.abs(), hbar);
    let amp = 2.0 * PI * gaussian_coefficient_scale(hbar) / w;
    let sf = s as f64;
    let damping = 1.0 / (12.0 * PI * sf * c.abs());
    let mut acc = C64::new(0.0, 0.0);
    for k in 1.. {
        let y = 2.0 * PI * k as f64 + c.signum() * x;
        let env = amp * (-damping * y).exp();
        if env < 1e-12 {
            break;
        }
        let quartic = C64::from_polar(1.0, -d * y * y / (18.0 * PI * sf * c * c));
        acc += quartic * env * airy_ai_neg_leading(y / w);
    }
    acc
}

/// Leading modulus of the squeezed revival profile, `ħ^{-ε/2}(sc/4)^{-1/4} e^{-x/ℓ}`.
pub fn squeezed_profile(x: f64, s: u32, c: f64, eps: f64, hbar: f64) -> Result<C64> {
    if !(eps > 0.0 && eps < 1.0) || c == 0.0 || !(x > 0.0 && x < 2.0 * PI) {
        return Err(Error::RegimeMismatch(format!("squeezed_profile: x = {x}, eps = {eps}, c = {c}")));
    }
    let sc = s as f64 * c.abs();
    let amp = hbar.powf(-eps / 2.0) * (sc / 4.0).powf(-0.25);
    Ok(C64::new(amp * (-x / squeezed_length(s, c, eps, hbar)).exp(), 0.0))
}

/// Localization length `12π s c ħ^ε` of the squeezed revival profile.
pub fn squeezed_length(s: u32, c: f64, eps: f64, hbar: f64) -> f64 {
    12.0 * PI * s as f64 * c.abs() * hbar.powf(eps)
}

/// Coefficients `c_{n,j}` in the basis `e^{inx} H_j(y/√ħ)`, row-major over `n` (DFT order).
#[derive(Clone, Debug, PartialEq)]
pub struct ProductCoeffs {
    pub n_modes: usize,
    pub j_levels: usize,
    pub data: Vec<C64>,
}

impl ProductCoeffs {
    pub fn zeros(n_modes: usize, j_levels: usize) -> Self {
        ProductCoeffs { n_modes, j_levels, data: vec![C64::new(0.0, 0.0); n_modes * j_levels] }
    }

    pub fn get(&self, k: usize, j: usize) -> C64 {
        self.data[k * self.j_levels + j]
    }

    pub fn set(&mut self, k: usize, j: usize, v: C64) {
        self.data[k * self.j_levels + j] = v;
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// x-profile of level `j` on an `n_modes`-point circle grid.
    pub fn level_profile(&self, j: usize) -> Vec<C64> {
        let mut v: Vec<C64> = (0..self.n_modes).map(|k| self.get(k, j)).collect();
        fft::inverse(&mut v);
        v
    }

    /// `ħ^{-1/4} Σ c_{n,j} e^{inx} H_j(y/√ħ)`.
    pub fn evaluate(&self, x: f64, y: f64, hbar: f64) -> C64 {
        let h = hermite_all(self.j_levels.saturating_sub(1), y / hbar.sqrt());
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.n_modes {
            let n = fft::freq_index(k, self.n_modes) as f64;
            let e = C64::from_polar(1.0, n * x);
            for (j, hj) in h.iter().enumerate() {
                acc += self.get(k, j) * e * *hj;
            }
        }
        acc * hbar.powf(-0.25)
    }
}

/// Coefficients of `H'(τ, h₁) = aτh₁ + bτ² + cτ³ + dτ⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductHamiltonian {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Multiply `c_{n,j}` by `e^{-i t H'(nħ, (j+½)ħ)/ħ}`.
pub fn product_mode_propagate(g: &ProductCoeffs, hp: ProductHamiltonian, t: impl Into<Time>, hbar: f64) -> Result<Diagnosed<ProductCoeffs>> {
    let t = t.into();
    let mut out = g.clone();
    let mut warnings = Vec::new();
    let max = g.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut edge: f64 = 0.0;
    for k in 0..g.n_modes {
        let n = fft::freq_index(k, g.n_modes);
        for j in 0..g.j_levels {
            if k == g.n_modes / 2 || j + 1 == g.j_levels {
                edge = edge.max(g.get(k, j).norm());
            }
            // H'/ħ written as a polynomial in n with the level energy folded into the coefficients
            let h1 = (j as f64 + 0.5) * hbar;
            let law = DispersionLaw::Polynomial(vec![0.0, hp.a * h1, hp.b, hp.c, hp.d]);
            let turns = phase_turns(&law, n, hbar, t)?;
            out.set(k, j, g.get(k, j) * C64::from_polar(1.0, -2.0 * PI * turns));
        }
    }
    if max > 0.0 && edge > 1e-8 * max {
        warnings.push(Warning::Truncation { context: "product_mode_propagate", mass: edge / max });
    }
    Ok(Diagnosed { value: out, warnings })
}

/// Per-level x-shift `2π s a (j+½)/b` (mod 2π) at `t = s·2π/(bħ)`.
pub fn product_mode_shift(hp: ProductHamiltonian, s: u32, j: usize) -> f64 {
    (2.0 * PI * s as f64 * hp.a * (j as f64 + 0.5) / hp.b).rem_euclid(2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{fidelity, inner_product, make_coherent_state, Grid};

    fn packet(q: f64, hbar: f64, n: usize) -> WaveFunction {
        make_coherent_state(&CoherentStateSpec::gaussian(q, 0.0, hbar), Grid::circle(n)).unwrap()
    }

    #[test]
    fn full_revival_is_identity() {
        let hbar = 2.0 * PI / 1024.0;
        let f = packet(1.0, hbar, 1024);
        let g = propagate_dispersion(&f, &DispersionLaw::quadratic(), Time::Revivals(1.0)).unwrap();
        let d: f64 = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-10, "{d}");
        let g = propagate_dispersion(&f, &DispersionLaw::quadratic(), quantum_period(hbar)).unwrap();
        assert!((fidelity(&f, &g).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_time_is_identity() {
        let f = packet(0.5, 1e-2, 512);
        let g = propagate_dispersion(&f, &DispersionLaw::cubic_quartic(0.3, 0.1), 0.0).unwrap();
        let d: f64 = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-14);
    }

    #[test]
    fn half_period_translates_by_pi() {
        let hbar = 2.0 * PI / 1024.0;
        let f = packet(0.0, hbar, 1024);
        let g = propagate_dispersion(&f, &DispersionLaw::quadratic(), Time::Revivals(0.5)).unwrap();
        let shifted = packet(PI, hbar, 1024);
        assert!((inner_product(&shifted, &g).unwrap().norm() - 1.0).abs() < 1e-9);
        // direct summation of the Fourier series at a few points
        let side = fourier_side(&f);
        for &x in &[PI - 0.05, PI, PI + 0.02] {
            let direct: C64 = (0..1024)
                .map(|k| {
                    let n = fft::freq_index(k, 1024) as f64;
                    side.coeffs[k] * C64::from_polar(1.0, -PI * n * n + n * x)
                })
                .sum();
            let k = (x / g.grid.dx()).round() as usize;
            let xk = g.grid.x(k);
            let direct_k: C64 = (0..1024)
                .map(|kk| {
                    let n = fft::freq_index(kk, 1024) as f64;
                    side.coeffs[kk] * C64::from_polar(1.0, -PI * n * n + n * xk)
                })
                .sum();
            assert!((direct_k - g.values[k]).norm() < 1e-9);
            let _ = direct;
        }
    }

    #[test]
    fn weights_small_cases() {
        let w = fractional_revival(1, 1).unwrap();
        assert_eq!(w.weights.len(), 1);
        assert!((w.weights[0].norm() - 1.0).abs() < 1e-14);
        let w = fractional_revival(1, 2).unwrap();
        assert!(w.weights[0].norm() < 1e-14);
        assert!((w.weights[1].norm() - 1.0).abs() < 1e-14);
        assert!((w.sites[1] - PI).abs() < 1e-15);
        let w = fractional_revival(1, 3).unwrap();
        for wj in &w.weights {
            assert!((wj.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        // brute-force three-term Gauss sums
        for j in 0..3 {
            let brute: C64 = (0..3)
                .map(|k| C64::from_polar(1.0, -2.0 * PI * (k * k) as f64 / 3.0 + 2.0 * PI * (j * k) as f64 / 3.0))
                .sum::<C64>()
                / 3.0;
            assert!((brute - w.weights[j]).norm() < 1e-14);
        }
        assert!(matches!(fractional_revival(2, 4), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn fractional_revival_matches_propagation() {
        let hbar = 2.0 * PI / 1024.0;
        let f = packet(0.0, hbar, 2048);
        for &(p, q) in &[(1, 2), (1, 3), (1, 4), (2, 5), (3, 7)] {
            let pred = fractional_revival(p, q).unwrap();
            let g = propagate_dispersion(&f, &DispersionLaw::quadratic(), Time::Revivals(pred.revivals)).unwrap();
            let s = pred.superpose(&f);
            let d: f64 = g.values.iter().zip(&s.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * f.grid.dx();
            assert!(d.sqrt() < 1e-8, "({p},{q}): {}", d.sqrt());
        }
    }

    #[test]
    fn absolute_time_phase_reduction_is_accurate() {
        // t = 2π·10⁴/ħ with ħ tiny: the raw phase is far beyond 1e8
        let hbar = 1e-4;
        let law = DispersionLaw::quadratic();
        let t = Time::Revivals(1e4);
        for n in [1i64, 17, 300, 8000] {
            assert!(phase_turns(&law, n, hbar, t).unwrap().abs() < 1e-12);
        }
        let turns = phase_turns(&law, 3, 0.5, Time::Absolute(0.25)).unwrap();
        assert!((turns - (0.25 * 9.0 * 0.5 / (2.0 * PI)).fract()).abs() < 1e-15);
    }

    #[test]
    fn callable_law_matches_polynomial() {
        let f = packet(0.3, 1e-2, 512);
        let a = propagate_dispersion(&f, &DispersionLaw::cubic_quartic(0.2, 0.0), 17.0).unwrap();
        let b = propagate_dispersion(&f, &DispersionLaw::Callable(Arc::new(|x: f64| x * x + 0.2 * x * x * x)), 17.0).unwrap();
        let d: f64 = a.values.iter().zip(&b.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-10);
    }

    #[test]
    fn airy_origin_values() {
        let (s, c, hbar) = (1, 0.1, 1e-3);
        let v = airy_profile(0.0, s, c, 0.0, hbar, AiryRegime::Origin).unwrap();
        let kappa = (2.0 * PI).sqrt() * PI.powf(-0.25) * (6.0 * PI).powf(-1.0 / 3.0);
        let expect = kappa * hbar.powf(-1.0 / 12.0) * (s as f64 * c).powf(-1.0 / 3.0) * 0.355_028_053_887_817_2;
        assert!((v.norm() - expect).abs() < 1e-12 * expect);
        let r = airy_profile(0.0, s, c, 0.0, hbar / 8.0, AiryRegime::Origin).unwrap().norm() / v.norm();
        assert!((r - 8f64.powf(1.0 / 12.0)).abs() < 1e-10);
        assert!(matches!(airy_profile(1.5, s, c, 0.0, hbar, AiryRegime::Origin), Err(Error::RegimeMismatch(_))));
        assert!(matches!(airy_profile(-0.1, s, c, 0.0, hbar, AiryRegime::Bulk), Err(Error::RegimeMismatch(_))));
    }

    #[test]
    fn ai0_against_integral_representation() {
        // (1/π)∫₀^∞ cos(u³/3) du, with the tail beyond U done by parts
        let u_max = 30.0;
        let v = crate::quad::adaptive_gk(|u| C64::new((u * u * u / 3.0).cos(), 0.0), 0.0, u_max, 1e-10, 10_000_000).unwrap();
        let tail = -(u_max.powi(3) / 3.0).sin() / (u_max * u_max);
        let ai0 = (v.re + tail) / PI;
        assert!((ai0 - airy_ai(0.0)).abs() < 1e-6, "{ai0}");
    }

    #[test]
    fn quartic_phase_trivial_for_d_zero() {
        let a = airy_profile(1.0, 1, 0.1, 0.0, 1e-3, AiryRegime::Bulk).unwrap();
        assert!(a.im.abs() < 1e-15);
    }

    #[test]
    fn squeezed_ratios() {
        let (s, c, eps, hbar) = (1, 0.1, 0.3, 1e-3);
        let l1 = squeezed_length(s, c, eps, hbar);
        let l2 = squeezed_length(s, c, eps, hbar / 10.0);
        assert!((l2 / l1 - 10f64.powf(-eps)).abs() < 1e-14);
        let x = 1e-9;
        let a1 = squeezed_profile(x, s, c, eps, hbar).unwrap().norm();
        let a2 = squeezed_profile(x, s, c, eps, hbar / 10.0).unwrap().norm();
        assert!((a2 / a1 - 10f64.powf(eps / 2.0)).abs() < 1e-6);
    }

    fn level_packet(m: usize, j_levels: usize, j: usize, hbar: f64) -> ProductCoeffs {
        let mut g = ProductCoeffs::zeros(m, j_levels);
        for k in 0..m {
            let n = fft::freq_index(k, m) as f64;
            g.set(k, j, C64::new((-0.5 * hbar * n * n).exp(), 0.0));
        }
        g
    }

    #[test]
    fn product_mode_full_revival() {
        let hbar = 2.0 * PI / 512.0;
        let mut g = level_packet(256, 4, 0, hbar);
        for k in 0..256 {
            for j in 1..3 {
                g.set(k, j, g.get(k, 0) * (j as f64 + 0.3));
            }
        }
        let hp = ProductHamiltonian { a: 0.0, b: 1.0, c: 0.0, d: 0.0 };
        let out = product_mode_propagate(&g, hp, Time::Revivals(1.0), hbar).unwrap().value;
        let d: f64 = g.data.iter().zip(&out.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-10);
        let id = product_mode_propagate(&g, hp, 0.0, hbar).unwrap().value;
        assert_eq!(id, g);
    }

    #[test]
    fn product_mode_level_shift() {
        let hbar = 2.0 * PI / 1024.0;
        let hp = ProductHamiltonian { a: 0.05, b: 1.0, c: 0.0, d: 0.0 };
        let m = 512;
        let dx = 2.0 * PI / m as f64;
        for j in 0..3 {
            let g = level_packet(m, 3, j, hbar);
            let out = product_mode_propagate(&g, hp, Time::Revivals(1.0), hbar).unwrap().value;
            let prof = out.level_profile(j);
            let k = (0..m).max_by(|&a, &b| prof[a].norm().partial_cmp(&prof[b].norm()).unwrap()).unwrap();
            let expect = product_mode_shift(hp, 1, j);
            let d = ((k as f64 * dx - expect + PI).rem_euclid(2.0 * PI) - PI).abs();
            assert!(d <= dx, "level {j}: peak {} expected {expect}", k as f64 * dx);
        }
    }

    #[test]
    fn product_mode_truncation_warning() {
        let mut g = ProductCoeffs::zeros(8, 2);
        g.set(4, 0, C64::new(1.0, 0.0));
        let out = product_mode_propagate(&g, ProductHamiltonian { a: 0.0, b: 1.0, c: 0.0, d: 0.0 }, 1.0, 0.1).unwrap();
        assert_eq!(out.warnings.len(), 1);
    }
}
