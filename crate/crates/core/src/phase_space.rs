//! Grids, sampled wave functions, symbols and coherent states.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridKind {
    LineSegment { x_min: f64, x_max: f64 },
    Circle,
    TorusLattice,
}

/// Uniform grid; the right endpoint is excluded so every grid is periodic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub kind: GridKind,
    pub n: usize,
}

impl Grid {
    pub fn line(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > x_min) || n < 2 {
            return Err(Error::InvalidArgument(format!("line grid [{x_min}, {x_max}) with n = {n}")));
        }
        Ok(Grid { kind: GridKind::LineSegment { x_min, x_max }, n })
    }

    pub fn circle(n: usize) -> Self {
        Grid { kind: GridKind::Circle, n }
    }

    pub fn torus(n: usize) -> Self {
        Grid { kind: GridKind::TorusLattice, n }
    }

    /// Default symbol grid `[-12, 12)` with 1024 samples.
    pub fn symbol_default() -> Self {
        Grid { kind: GridKind::LineSegment { x_min: -12.0, x_max: 12.0 }, n: 1024 }
    }

    pub fn start(&self) -> f64 {
        match self.kind {
            GridKind::LineSegment { x_min, .. } => x_min,
            _ => 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        match self.kind {
            GridKind::LineSegment { x_min, x_max } => x_max - x_min,
            _ => 2.0 * PI,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.start() + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Quadrature weight of one sample: `dx` on line and circle, `1` on the torus.
    pub fn weight(&self) -> f64 {
        match self.kind {
            GridKind::TorusLattice => 1.0,
            _ => self.dx(),
        }
    }

    /// Angular wave number of DFT bin `k`.
    pub fn wave_number(&self, k: usize) -> f64 {
        2.0 * PI * fft::freq_index(k, self.n) as f64 / self.length()
    }

    pub fn wave_numbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wave_number(k)).collect()
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self.kind, GridKind::LineSegment { .. })
    }

    fn label(&self) -> String {
        match self.kind {
            GridKind::LineSegment { x_min, x_max } => format!("line x_min={x_min:e} x_max={x_max:e}"),
            GridKind::Circle => "circle".into(),
            GridKind::TorusLattice => "torus".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub hbar: f64,
}

impl WaveFunction {
    pub fn new(grid: Grid, values: Vec<C64>, hbar: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples on a grid of {}", values.len(), grid.n)));
        }
        Ok(WaveFunction { grid, values, hbar })
    }

    pub fn from_fn(grid: Grid, hbar: f64, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        WaveFunction { grid, values, hbar }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Inverse participation ratio `∫|ψ|⁴ / (∫|ψ|²)²`.
    pub fn ipr(&self) -> f64 {
        let w = self.grid.weight();
        let p4: f64 = self.values.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * w;
        p4 / self.norm_sq().powi(2)
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if v.norm() > self.values[best].norm() {
                best = k;
            }
        }
        best
    }

    pub fn peak_x(&self) -> f64 {
        self.grid.x(self.peak_index())
    }

    /// Probability mass in the outer `fraction` of the samples at each end.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let m = ((self.grid.n as f64 * fraction).ceil() as usize).max(1);
        let w = self.grid.weight();
        let lo: f64 = self.values[..m].iter().map(|v| v.norm_sqr()).sum();
        let hi: f64 = self.values[self.grid.n - m..].iter().map(|v| v.norm_sqr()).sum();
        (lo + hi) * w / self.norm_sq()
    }

    /// `∫ P(x) |ψ|²`.
    pub fn position_expectation(&self, p: impl Fn(f64) -> f64) -> f64 {
        let w = self.grid.weight();
        self.values.iter().enumerate().map(|(k, v)| p(self.grid.x(k)) * v.norm_sqr()).sum::<f64>() * w
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# grid={} n={} hbar={:e}", self.grid.label(), self.grid.n, self.hbar)?;
        writeln!(w, "x,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.grid.x(k), v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty csv".into()))??;
        let field = |key: &str| -> Option<String> {
            header.split_whitespace().find_map(|t| t.strip_prefix(&format!("{key}=")).map(|s| s.to_string()))
        };
        let bad = |what: &str| Error::InvalidArgument(format!("csv header: {what}"));
        let n: usize = field("n").and_then(|s| s.parse().ok()).ok_or_else(|| bad("n"))?;
        let hbar: f64 = field("hbar").and_then(|s| s.parse().ok()).ok_or_else(|| bad("hbar"))?;
        let grid = match field("grid").as_deref() {
            Some("circle") => Grid::circle(n),
            Some("torus") => Grid::torus(n),
            Some("line") => {
                let a: f64 = field("x_min").and_then(|s| s.parse().ok()).ok_or_else(|| bad("x_min"))?;
                let b: f64 = field("x_max").and_then(|s| s.parse().ok()).ok_or_else(|| bad("x_max"))?;
                Grid::line(a, b, n)?
            }
            _ => return Err(bad("grid")),
        };
        let _columns = lines.next();
        let mut values = Vec::with_capacity(n);
        for line in lines {
            let line = line?;
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("row"));
            }
            let re: f64 = parts[1].trim().parse().map_err(|_| bad("re"))?;
            let im: f64 = parts[2].trim().parse().map_err(|_| bad("im"))?;
            values.push(C64::new(re, im));
        }
        WaveFunction::new(grid, values, hbar)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticSymbol {
    /// `π^{-1/4} e^{-y²/2}`
    Gaussian,
}

/// A symbol `a(y)` sampled on a line grid, evaluated off-grid by cubic interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
    analytic: Option<AnalyticSymbol>,
}

pub fn gaussian_symbol(y: f64) -> f64 {
    PI.powf(-0.25) * (-0.5 * y * y).exp()
}

impl SymbolFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples on a grid of {}", values.len(), grid.n)));
        }
        if grid.is_periodic() {
            return Err(Error::InvalidArgument("symbols live on a line grid".into()));
        }
        Ok(SymbolFunction { grid, values, analytic: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        SymbolFunction::new(grid, values)
    }

    pub fn gaussian(grid: Grid) -> Self {
        let values = grid.points().into_iter().map(|y| C64::new(gaussian_symbol(y), 0.0)).collect();
        SymbolFunction { grid, values, analytic: Some(AnalyticSymbol::Gaussian) }
    }

    pub fn gaussian_default() -> Self {
        Self::gaussian(Grid::symbol_default())
    }

    pub fn analytic(&self) -> Option<AnalyticSymbol> {
        self.analytic
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::NonNormalizedSymbol(n));
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self.analytic = self.analytic.filter(|_| (n - 1.0).abs() < 1e-12);
        self
    }

    pub fn map_values(&self, f: impl Fn(f64, C64) -> C64) -> SymbolFunction {
        let values = self.values.iter().enumerate().map(|(k, v)| f(self.grid.x(k), *v)).collect();
        SymbolFunction { grid: self.grid, values, analytic: None }
    }

    pub fn scale(&self, c: C64) -> SymbolFunction {
        self.map_values(|_, v| v * c)
    }

    /// `a(y)`; zero outside the sampled window.
    pub fn eval(&self, y: f64) -> C64 {
        if let Some(AnalyticSymbol::Gaussian) = self.analytic {
            return C64::new(gaussian_symbol(y), 0.0);
        }
        interpolate_cubic(&self.grid, &self.values, y)
    }

    /// Resample onto another line grid.
    pub fn resample(&self, grid: Grid) -> SymbolFunction {
        let values = grid.points().into_iter().map(|y| self.eval(y)).collect();
        SymbolFunction { grid, values, analytic: self.analytic }
    }

    pub fn inner(&self, other: &SymbolFunction) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("symbols on different grids".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.dx())
    }

    /// Second moments `(⟨y²⟩, ⟨k²⟩)` of `|a|²` and `|â|²` about their means.
    pub fn spreads(&self) -> (f64, f64) {
        let w: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let ys = self.grid.points();
        let m1: f64 = ys.iter().zip(&self.values).map(|(y, v)| y * v.norm_sqr()).sum::<f64>() / w;
        let m2: f64 = ys.iter().zip(&self.values).map(|(y, v)| (y - m1).powi(2) * v.norm_sqr()).sum::<f64>() / w;
        let mut f = self.values.clone();
        fft::forward(&mut f);
        let ks = self.grid.wave_numbers();
        let wk: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        let k1: f64 = ks.iter().zip(&f).map(|(k, v)| k * v.norm_sqr()).sum::<f64>() / wk;
        let k2: f64 = ks.iter().zip(&f).map(|(k, v)| (k - k1).powi(2) * v.norm_sqr()).sum::<f64>() / wk;
        (m2, k2)
    }
}

/// Four-point Lagrange interpolation on a non-periodic grid; zero outside.
pub fn interpolate_cubic(grid: &Grid, values: &[C64], y: f64) -> C64 {
    let s = (y - grid.start()) / grid.dx();
    let n = grid.n as isize;
    if s < 0.0 || s > (n - 1) as f64 {
        return C64::new(0.0, 0.0);
    }
    let i = (s.floor() as isize).clamp(1, (n - 3).max(1));
    let t = s - i as f64;
    let get = |j: isize| if j >= 0 && j < n { values[j as usize] } else { C64::new(0.0, 0.0) };
    let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

#[derive(Clone, Debug)]
pub struct CoherentStateSpec {
    pub q: f64,
    pub p: f64,
    pub symbol: SymbolFunction,
    pub hbar: f64,
    /// `ε` in `ħ_eff = ħ^{1-ε}`; zero for an ordinary coherent state.
    pub squeeze: f64,
}

impl CoherentStateSpec {
    pub fn gaussian(q: f64, p: f64, hbar: f64) -> Self {
        CoherentStateSpec { q, p, symbol: SymbolFunction::gaussian_default(), hbar, squeeze: 0.0 }
    }

    pub fn squeezed(mut self, eps: f64) -> Self {
        self.squeeze = eps;
        self
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar.powf(1.0 - self.squeeze)
    }
}

/// Smallest circle grid size accepted for a given `ħ`.
pub fn circle_min_n(hbar: f64) -> usize {
    (16.0 / hbar.sqrt()).ceil() as usize
}

/// Build `ħ_eff^{-1/4} a((x-q)/√ħ_eff) e^{ipx/ħ}` on `grid`, normalized.
pub fn make_coherent_state(spec: &CoherentStateSpec, grid: Grid) -> Result<WaveFunction> {
    spec.symbol.check_normalized()?;
    if !(spec.hbar > 0.0) {
        return Err(Error::InvalidArgument("ħ must be positive".into()));
    }
    let he = spec.hbar_eff();
    let sq = he.sqrt();
    match grid.kind {
        GridKind::Circle => {
            if grid.n < circle_min_n(spec.hbar) {
                return Err(Error::GridTooCoarse(format!("N = {} < 16 ħ^(-1/2) = {}", grid.n, circle_min_n(spec.hbar))));
            }
            let values = if spec.symbol.analytic() == Some(AnalyticSymbol::Gaussian) {
                let k0 = spec.p / spec.hbar;
                let mut c: Vec<C64> = (0..grid.n)
                    .map(|k| {
                        let n = fft::freq_index(k, grid.n) as f64;
                        let d = n - k0;
                        C64::from_polar((-0.5 * he * d * d).exp(), -d * spec.q)
                    })
                    .collect();
                fft::inverse(&mut c);
                c
            } else {
                periodized_samples(spec, grid, 5)
            };
            Ok(WaveFunction { grid, values, hbar: spec.hbar }.normalized())
        }
        GridKind::LineSegment { .. } => {
            if grid.dx() > spec.hbar.sqrt() / 8.0 {
                return Err(Error::GridTooCoarse(format!("dx = {:e} > √ħ/8", grid.dx())));
            }
            let values = grid
                .points()
                .into_iter()
                .map(|x| spec.symbol.eval((x - spec.q) / sq) * C64::from_polar(1.0, spec.p * x / spec.hbar))
                .collect();
            Ok(WaveFunction { grid, values, hbar: spec.hbar }.normalized())
        }
        GridKind::TorusLattice => {
            let values = periodized_samples(spec, grid, 3);
            Ok(WaveFunction { grid, values, hbar: spec.hbar }.normalized())
        }
    }
}

fn periodized_samples(spec: &CoherentStateSpec, grid: Grid, images: i32) -> Vec<C64> {
    let sq = spec.hbar_eff().sqrt();
    grid.points()
        .into_iter()
        .map(|x| {
            (-images..=images)
                .map(|m| {
                    let xm = x + 2.0 * PI * m as f64;
                    spec.symbol.eval((xm - spec.q) / sq) * C64::from_polar(1.0, spec.p * xm / spec.hbar)
                })
                .sum()
        })
        .collect()
}

/// `⟨f, g⟩ = ∫ conj(f) g`.
pub fn inner_product(f: &WaveFunction, g: &WaveFunction) -> Result<C64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, g.grid)));
    }
    Ok(f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum::<C64>() * f.grid.weight())
}

/// Phase-insensitive distance `√(2 - 2|⟨f, g⟩|)` between normalized states.
pub fn fidelity_distance(f: &WaveFunction, g: &WaveFunction) -> Result<f64> {
    let ov = inner_product(f, g)?.norm() / (f.norm() * g.norm());
    Ok((2.0 - 2.0 * ov).max(0.0).sqrt())
}

/// `|⟨f, g⟩|` for normalized inputs.
pub fn fidelity(f: &WaveFunction, g: &WaveFunction) -> Result<f64> {
    Ok(inner_product(f, g)?.norm() / (f.norm() * g.norm()))
}

/// Fourier coefficients with `f(x) = Σ c_n e^{i k_n (x - x_0)}`, `n = -N/2 … N/2-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSide {
    pub grid: Grid,
    pub hbar: f64,
    /// Indexed in DFT order; use [`FourierSide::coefficient`] for signed access.
    pub coeffs: Vec<C64>,
}

impl FourierSide {
    pub fn coefficient(&self, n: i64) -> C64 {
        let len = self.grid.n as i64;
        self.coeffs[n.rem_euclid(len) as usize]
    }

    /// `Σ|c_n|²` weighted so that it equals `‖f‖²` in the grid's norm.
    pub fn weighted_norm_sq(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        match self.grid.kind {
            GridKind::TorusLattice => s * self.grid.n as f64,
            _ => s * self.grid.length(),
        }
    }

    pub fn wave_numbers(&self) -> Vec<f64> {
        self.grid.wave_numbers()
    }
}

pub fn fourier_side(f: &WaveFunction) -> FourierSide {
    let mut c = f.values.clone();
    fft::forward(&mut c);
    let s = 1.0 / f.grid.n as f64;
    for v in &mut c {
        *v *= s;
    }
    FourierSide { grid: f.grid, hbar: f.hbar, coeffs: c }
}

pub fn from_fourier_side(c: &FourierSide) -> WaveFunction {
    let mut v = c.coeffs.clone();
    fft::inverse(&mut v);
    WaveFunction { grid: c.grid, values: v, hbar: c.hbar }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_gaussian_normalized_and_centered() {
        let hbar = 2.0 * PI / 1024.0;
        let spec = CoherentStateSpec::gaussian(1.0, 0.0, hbar);
        let f = make_coherent_state(&spec, Grid::circle(1024)).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!((f.peak_x() - 1.0).abs() < Grid::circle(1024).dx());
    }

    #[test]
    fn circle_analytic_matches_periodization() {
        let hbar = 1e-2;
        let spec = CoherentStateSpec::gaussian(2.0, 0.3, hbar);
        let grid = Grid::circle(512);
        let a = make_coherent_state(&spec, grid).unwrap();
        let sampled = CoherentStateSpec {
            symbol: SymbolFunction::gaussian_default().map_values(|_, v| v),
            ..spec.clone()
        };
        let b = make_coherent_state(&sampled, grid).unwrap();
        assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separated_states_have_small_overlap() {
        let hbar = 1e-3;
        let grid = Grid::line(-1.0, 1.0, 4096).unwrap();
        let f = make_coherent_state(&CoherentStateSpec::gaussian(0.0, 0.0, hbar), grid).unwrap();
        let g = make_coherent_state(&CoherentStateSpec::gaussian(0.3, 0.0, hbar), grid).unwrap();
        let ov = inner_product(&f, &g).unwrap().norm();
        let exact = (-0.09f64 / (4.0 * hbar)).exp();
        assert!((ov - exact).abs() < 1e-10, "{ov} vs {exact}");
    }

    #[test]
    fn coarse_grid_rejected() {
        let spec = CoherentStateSpec::gaussian(0.0, 0.0, 1e-4);
        assert!(matches!(make_coherent_state(&spec, Grid::circle(256)), Err(Error::GridTooCoarse(_))));
        let line = Grid::line(-1.0, 1.0, 64).unwrap();
        assert!(matches!(make_coherent_state(&spec, line), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn non_normalized_symbol_rejected() {
        let mut spec = CoherentStateSpec::gaussian(0.0, 0.0, 1e-2);
        spec.symbol = spec.symbol.scale(C64::new(1.1, 0.0));
        assert!(matches!(make_coherent_state(&spec, Grid::circle(1024)), Err(Error::NonNormalizedSymbol(_))));
    }

    #[test]
    fn single_mode_coefficient() {
        let f = WaveFunction::from_fn(Grid::circle(64), 0.1, |x| C64::from_polar(1.0, 3.0 * x));
        let c = fourier_side(&f);
        assert!((c.coefficient(3) - 1.0).norm() < 1e-14);
        assert!(c.coefficient(2).norm() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let f = make_coherent_state(&CoherentStateSpec::gaussian(0.5, 0.1, 1e-2), Grid::circle(256)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = WaveFunction::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(f, g);
        let line = WaveFunction::from_fn(Grid::line(-1.0, 2.0, 16).unwrap(), 0.5, |x| C64::new(x, -x));
        let mut buf = Vec::new();
        line.write_csv(&mut buf).unwrap();
        assert_eq!(line, WaveFunction::read_csv(std::io::Cursor::new(buf)).unwrap());
    }

    #[test]
    fn interpolation_is_fourth_order() {
        let grid = Grid::line(-12.0, 12.0, 1024).unwrap();
        let s = SymbolFunction::from_fn(grid, |y| C64::new(gaussian_symbol(y), 0.0)).unwrap();
        let err = (s.eval(0.3777) - gaussian_symbol(0.3777)).norm();
        assert!(err < 1e-7, "{err}");
        assert_eq!(s.eval(13.0), C64::new(0.0, 0.0));
    }
}
