//! Reference quantum propagators: split-step for `κξ² + V(x)` on line and circle
//! grids, and the Harper operator on the quantized torus.

use crate::error::{Error, Result};
use crate::fft::FftPair;
use crate::phase_space::{fourier_side, GridKind, WaveFunction};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

/// Boundary-mass threshold for line-grid propagation.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Strang splitting stepper for `H = κ(-iħ∂)² + V(x)`.
pub struct SplitStep {
    kinetic: Vec<C64>,
    half_potential: Vec<C64>,
    full_potential: Vec<C64>,
    fft: FftPair,
    pub dt: f64,
    pub grid: crate::phase_space::Grid,
    pub hbar: f64,
}

impl SplitStep {
    pub fn new(grid: crate::phase_space::Grid, hbar: f64, kappa: f64, v: &dyn Fn(f64) -> f64, dt: f64) -> Self {
        let n = grid.n;
        let inv_n = 1.0 / n as f64;
        let kinetic = grid
            .wave_numbers()
            .into_iter()
            .map(|k| C64::from_polar(inv_n, -dt * kappa * hbar * k * k))
            .collect();
        let vx: Vec<f64> = grid.points().into_iter().map(v).collect();
        let half_potential = vx.iter().map(|v| C64::from_polar(1.0, -0.5 * dt * v / hbar)).collect();
        let full_potential = vx.iter().map(|v| C64::from_polar(1.0, -dt * v / hbar)).collect();
        SplitStep { kinetic, half_potential, full_potential, fft: FftPair::new(n), dt, grid, hbar }
    }

    fn kinetic_step(&mut self, psi: &mut [C64]) {
        self.fft.forward(psi);
        for (p, k) in psi.iter_mut().zip(&self.kinetic) {
            *p *= k;
        }
        self.fft.inverse(psi);
    }

    /// Advance `steps` Strang steps in place.
    pub fn advance(&mut self, psi: &mut [C64], steps: usize) {
        if steps == 0 {
            return;
        }
        for (p, v) in psi.iter_mut().zip(&self.half_potential) {
            *p *= v;
        }
        for s in 0..steps {
            self.kinetic_step(psi);
            let last = s + 1 == steps;
            let pot = if last { &self.half_potential } else { &self.full_potential };
            for (p, v) in psi.iter_mut().zip(pot) {
                *p *= v;
            }
        }
    }
}

fn check_boundary(f: &WaveFunction) -> Result<()> {
    if let GridKind::LineSegment { .. } = f.grid.kind {
        let m = f.edge_mass(0.02);
        if m > BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryMassLeak(m));
        }
    }
    Ok(())
}

fn steps_for(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("split step needs t ≥ 0 and dt > 0 (t = {t}, dt = {dt})")));
    }
    if t == 0.0 {
        return Ok((0, dt));
    }
    let n = (t / dt).ceil().max(1.0) as usize;
    Ok((n, t / n as f64))
}

/// `e^{-itH/ħ} f` for `H = κ(-iħ∂)² + V` by Strang splitting.
pub fn split_step_kinetic(f: &WaveFunction, kappa: f64, v: &dyn Fn(f64) -> f64, t: f64, dt: f64) -> Result<WaveFunction> {
    if f.grid.kind == GridKind::TorusLattice {
        return Err(Error::GridMismatch("split_step runs on line or circle grids".into()));
    }
    let (n, tau) = steps_for(t, dt)?;
    let mut stepper = SplitStep::new(f.grid, f.hbar, kappa, v, tau);
    let mut out = f.clone();
    stepper.advance(&mut out.values, n);
    check_boundary(&out)?;
    Ok(out)
}

/// `e^{-itH/ħ} f` for `H = -ħ²Δ + V`.
pub fn split_step(f: &WaveFunction, v: &dyn Fn(f64) -> f64, t: f64, dt: f64) -> Result<WaveFunction> {
    split_step_kinetic(f, 1.0, v, t, dt)
}

/// Compare one run at `dt` against one at `dt/2`; the L² difference must stay below `tol`.
pub fn verify_step(f: &WaveFunction, kappa: f64, v: &dyn Fn(f64) -> f64, t: f64, dt: f64, tol: f64) -> Result<f64> {
    let a = split_step_kinetic(f, kappa, v, t, dt)?;
    let b = split_step_kinetic(f, kappa, v, t, dt / 2.0)?;
    let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * f.grid.weight();
    let d = d.sqrt();
    if d > tol {
        return Err(Error::StepUnconverged(d));
    }
    Ok(d)
}

/// Dense operator on the `N`-point torus lattice (`ħ = 2π/N`).
pub struct TorusOperator {
    pub n: usize,
    pub hbar: f64,
    pub name: String,
    pub matrix: DMatrix<C64>,
    eigen: OnceLock<Arc<(Vec<f64>, DMatrix<C64>)>>,
}

impl std::fmt::Debug for TorusOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TorusOperator({}, N = {})", self.name, self.n)
    }
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct Sidecar {
    #[serde(rename = "N")]
    n: usize,
    hbar: f64,
    name: String,
}

pub const DENSE_LIMIT: usize = 4096;

impl TorusOperator {
    pub fn new(name: &str, matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if n < 8 || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!("torus operator must be square with N ≥ 8, got {}×{}", n, matrix.ncols())));
        }
        let op = TorusOperator { n, hbar: 2.0 * PI / n as f64, name: name.into(), matrix, eigen: OnceLock::new() };
        let herm = op.hermiticity_defect();
        if herm > 1e-12 {
            return Err(Error::InvalidArgument(format!("operator not Hermitian: defect {herm:e}")));
        }
        Ok(op)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues (ascending) and eigenvectors (columns), computed once.
    pub fn eigen(&self) -> Result<Arc<(Vec<f64>, DMatrix<C64>)>> {
        if self.n > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge(self.n));
        }
        Ok(self
            .eigen
            .get_or_init(|| {
                let real = self.matrix.iter().all(|v| v.im == 0.0);
                let (vals, vecs): (Vec<f64>, DMatrix<C64>) = if real {
                    let m = self.matrix.map(|v| v.re);
                    let e = SymmetricEigen::new(m);
                    (e.eigenvalues.iter().cloned().collect(), e.eigenvectors.map(|v| C64::new(v, 0.0)))
                } else {
                    let e = SymmetricEigen::new(self.matrix.clone());
                    (e.eigenvalues.iter().cloned().collect(), e.eigenvectors)
                };
                let mut order: Vec<usize> = (0..vals.len()).collect();
                order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
                let sorted_vals = order.iter().map(|&k| vals[k]).collect();
                let sorted_vecs = DMatrix::from_fn(self.n, self.n, |i, j| vecs[(i, order[j])]);
                Arc::new((sorted_vals, sorted_vecs))
            })
            .clone())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.matrix * x).iter().cloned().collect()
    }

    /// Row-major complex pairs as little-endian `f64`, plus a JSON sidecar.
    pub fn write_dump(&self, bin: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(bin)?);
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.matrix[(i, j)];
                f.write_all(&v.re.to_le_bytes())?;
                f.write_all(&v.im.to_le_bytes())?;
            }
        }
        f.flush()?;
        let side = Sidecar { n: self.n, hbar: self.hbar, name: self.name.clone() };
        std::fs::write(sidecar_path(bin), serde_json::to_string_pretty(&side).map_err(|e| Error::Io(e.to_string()))?)?;
        Ok(())
    }

    pub fn read_dump(bin: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(bin))?).map_err(|e| Error::Io(e.to_string()))?;
        let mut bytes = Vec::new();
        std::fs::File::open(bin)?.read_to_end(&mut bytes)?;
        if bytes.len() != side.n * side.n * 16 {
            return Err(Error::Io(format!("dump holds {} bytes, expected {}", bytes.len(), side.n * side.n * 16)));
        }
        let val = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let m = DMatrix::from_fn(side.n, side.n, |i, j| {
            let k = 2 * (i * side.n + j);
            C64::new(val(k), val(k + 1))
        });
        TorusOperator::new(&side.name, m)
    }
}

fn sidecar_path(bin: &Path) -> std::path::PathBuf {
    bin.with_extension("json")
}

/// `cos p̂ - cos q̂` on the `N`-point lattice: symmetric shift minus diagonal `cos(2πk/N)`.
pub fn harper_operator(n: usize) -> Result<TorusOperator> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!("N = {n} < 8")));
    }
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for k in 0..n {
        m[(k, k)] = C64::new(-(2.0 * PI * k as f64 / n as f64).cos(), 0.0);
        m[(k, (k + 1) % n)] += C64::new(0.5, 0.0);
        m[(k, (k + n - 1) % n)] += C64::new(0.5, 0.0);
    }
    TorusOperator::new("harper", m)
}

/// `e^{-itH/ħ} ψ`, exact through the eigendecomposition (Chebyshev beyond the dense limit).
pub fn torus_propagate(state: &[C64], op: &TorusOperator, t: f64) -> Result<Vec<C64>> {
    if state.len() != op.n {
        return Err(Error::GridMismatch(format!("state of length {} for N = {}", state.len(), op.n)));
    }
    if op.n > DENSE_LIMIT {
        return torus_propagate_chebyshev(state, op, t, 1e-10);
    }
    let eig = op.eigen()?;
    let (vals, vecs) = (&eig.0, &eig.1);
    let psi = DVector::from_column_slice(state);
    let mut c = vecs.adjoint() * psi;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= C64::from_polar(1.0, -t * vals[k] / op.hbar);
    }
    Ok((vecs * c).iter().cloned().collect())
}

/// Bessel functions `J_0..=J_kmax` at `x` by Miller's backward recurrence.
fn bessel_j_all(kmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = kmax + 20 + (x.abs() as usize) + 20;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().take(start + 1).skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    // normalization J_0 + 2 Σ J_{2k} = 1
    let mut s = j[0];
    let mut k = 2;
    while k <= start {
        s += 2.0 * j[k];
        k += 2;
    }
    j.truncate(kmax + 1);
    j.iter().map(|v| v / s).collect()
}

/// Chebyshev expansion of `e^{-itH/ħ}` using `‖H‖ ≤ Σ|row|` as spectral bound.
pub fn torus_propagate_chebyshev(state: &[C64], op: &TorusOperator, t: f64, tol: f64) -> Result<Vec<C64>> {
    let bound = (0..op.n).map(|i| (0..op.n).map(|j| op.matrix[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let x = t * bound / op.hbar;
    let kmax = (x.abs() * 1.2 + 40.0 + 5.0 * (-tol.log10())) as usize;
    let jk = bessel_j_all(kmax, x.abs());
    let sgn = if x >= 0.0 { 1.0 } else { -1.0 };
    let scaled = |v: &[C64]| -> Vec<C64> { op.apply(v).into_iter().map(|c| c / bound).collect() };
    let mut t0: Vec<C64> = state.to_vec();
    let mut t1 = scaled(&t0);
    let mut out: Vec<C64> = t0.iter().map(|v| v * jk[0]).collect();
    let mut phase = C64::new(0.0, -sgn);
    for (k, jv) in jk.iter().enumerate().skip(1) {
        let coef = phase * 2.0 * *jv;
        for (o, v) in out.iter_mut().zip(&t1) {
            *o += coef * v;
        }
        if k == kmax {
            break;
        }
        let ht1 = scaled(&t1);
        let t2: Vec<C64> = ht1.iter().zip(&t0).map(|(a, b)| 2.0 * a - b).collect();
        t0 = t1;
        t1 = t2;
        phase *= C64::new(0.0, -sgn);
    }
    Ok(out)
}

type Sym1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Weyl symbol of an observable with a declared form.
#[derive(Clone)]
pub enum ObservableSymbol {
    Position(Sym1),
    Momentum(Sym1),
    Separable(Sym1, Sym1),
    General(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl ObservableSymbol {
    pub fn position(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ObservableSymbol::Position(Arc::new(f))
    }

    pub fn momentum(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ObservableSymbol::Momentum(Arc::new(f))
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match self {
            ObservableSymbol::Position(f) => f(x),
            ObservableSymbol::Momentum(f) => f(xi),
            ObservableSymbol::Separable(f, g) => f(x) + g(xi),
            ObservableSymbol::General(f) => f(x, xi),
        }
    }
}

fn momentum_expectation(f: &WaveFunction, p: &dyn Fn(f64) -> f64) -> f64 {
    let side = fourier_side(f);
    let ks = side.wave_numbers();
    let w: f64 = side.coeffs.iter().map(|c| c.norm_sqr()).sum();
    side.coeffs.iter().zip(&ks).map(|(c, k)| p(f.hbar * k) * c.norm_sqr()).sum::<f64>() / w
}

/// `⟨f, P^w f⟩ / ⟨f, f⟩` for position-only, momentum-only or separable symbols.
pub fn observable_expectation(f: &WaveFunction, p: &ObservableSymbol) -> Result<f64> {
    let norm = f.norm_sq();
    let pos = |g: &Sym1| f.position_expectation(|x| g(x)) / norm;
    match p {
        ObservableSymbol::Position(g) => Ok(pos(g)),
        ObservableSymbol::Momentum(g) => Ok(momentum_expectation(f, g.as_ref())),
        ObservableSymbol::Separable(g, h) => Ok(pos(g) + momentum_expectation(f, h.as_ref())),
        ObservableSymbol::General(_) => Err(Error::UnsupportedSymbolForm("mixed x-ξ symbols have no expectation route".into())),
    }
}
