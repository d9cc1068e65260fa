//! Long-time reconstruction: symbol maps across a separatrix, lattice path sums,
//! Lagrangian expectations and revival scans.

use crate::classical::{separatrix, t0_default, Branch, HamiltonianSystem, NormalChart, SeparatrixCurve, SeparatrixOptions};
use crate::error::{Diagnosed, Error, Result, Warning};
use crate::fit::linear_fit;
use crate::metaplectic::metaplectic_rotation;
use crate::phase_space::{fidelity, inner_product, make_coherent_state, CoherentStateSpec, Grid, SymbolFunction, WaveFunction};
use crate::quad::{adaptive_gk, filon_linear, gauss_legendre};
use crate::weyl::{harper_operator, torus_propagate, ObservableSymbol, SplitStep, BOUNDARY_TOLERANCE};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Smooth cutoff: 1 on `[-1, 1]`, 0 outside `(-2, 2)`, mollifier profile in between.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffFunction;

impl CutoffFunction {
    pub const INNER: f64 = 1.0;
    pub const OUTER: f64 = 2.0;

    pub fn eval(&self, y: f64) -> f64 {
        rho(y)
    }
}

pub fn rho(y: f64) -> f64 {
    let a = y.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let u = a - 1.0;
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// Parameters shared by the separatrix symbol maps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapParams {
    pub hbar: f64,
    pub gamma: f64,
    pub s_plus: f64,
    pub s_minus: f64,
}

impl MapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.2) {
            return Err(Error::InvalidArgument(format!("γ = {} outside (0, 1/5)", self.gamma)));
        }
        if !(self.hbar > 0.0 && self.hbar < 1.0) {
            return Err(Error::InvalidArgument(format!("ħ = {} outside (0, 1)", self.hbar)));
        }
        Ok(())
    }

    /// Support edge `2ħ^{-γ}` of the cutoff in the integration variable.
    pub fn mu_max(&self) -> f64 {
        2.0 * self.hbar.powf(-self.gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureScheme {
    /// Gauss-Legendre panels on the knots `1/y_k` of the symbol grid, Filon on fast panels.
    Graded,
    /// Adaptive Gauss-Kronrod per output point.
    Adaptive,
}

const PANEL_WIDTH: f64 = 0.05;
const FILON_PHASE: f64 = 50.0;
const ADAPTIVE_TOL: f64 = 1e-11;

/// `(1/√2π) ∫_0^∞ a(σ/ν)/ν ρ(νħ^γ) e^{i f σ η ν} dν` at every point `η` of the symbol grid.
///
/// With `f = 1` this is `∫_0^{σ∞} a(1/μ)/μ ρ(σμħ^γ) e^{iημ} dμ / √2π`.
pub fn half_line_transform(a: &SymbolFunction, hbar: f64, gamma: f64, sigma: f64, f: f64, scheme: QuadratureScheme) -> Result<Vec<C64>> {
    let h_g = hbar.powf(gamma);
    let nu_hi = 2.0 / h_g;
    let etas = a.grid.points();
    let edge = if sigma > 0.0 { a.grid.start() + a.grid.length() } else { -a.grid.start() };
    let nu_lo = 1.0 / edge.max(1e-300);
    let norm = 1.0 / (2.0 * PI).sqrt();
    if nu_lo >= nu_hi {
        return Ok(vec![C64::new(0.0, 0.0); a.grid.n]);
    }
    let g = |nu: f64| -> C64 { a.eval(sigma / nu) * (rho(nu * h_g) / nu) };
    let omega = f * sigma;
    match scheme {
        QuadratureScheme::Graded => {
            let mut knots: Vec<f64> = a
                .grid
                .points()
                .into_iter()
                .filter(|y| sigma * y > 0.0)
                .map(|y| 1.0 / y.abs())
                .filter(|&nu| nu > nu_lo && nu < nu_hi)
                .collect();
            knots.extend([nu_lo, nu_hi, 1.0 / h_g]);
            knots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut merged = vec![knots[0]];
            for &k in &knots[1..] {
                if k - merged.last().unwrap() > 1e-4 {
                    merged.push(k);
                }
            }
            *merged.last_mut().unwrap() = nu_hi;
            let eta_max = etas.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let (gx, gw) = gauss_legendre(16);
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            let mut out = vec![C64::new(0.0, 0.0); a.grid.n];
            for w in merged.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let pieces = ((hi - lo) / PANEL_WIDTH).ceil().max(1.0) as usize;
                let step = (hi - lo) / pieces as f64;
                for p in 0..pieces {
                    let (l, r) = (lo + p as f64 * step, lo + (p + 1) as f64 * step);
                    if eta_max * (r - l) > FILON_PHASE {
                        let m = ((eta_max * (r - l) / 0.5).ceil() as usize).max(2);
                        let mu: Vec<f64> = (0..=m).map(|k| l + (r - l) * k as f64 / m as f64).collect();
                        let fv: Vec<C64> = mu.iter().map(|&x| g(x)).collect();
                        for (o, &eta) in out.iter_mut().zip(&etas) {
                            *o += filon_linear(&mu, &fv, omega * eta);
                        }
                        continue;
                    }
                    let (c, hw) = (0.5 * (l + r), 0.5 * (r - l));
                    for (x, wt) in gx.iter().zip(&gw) {
                        let nu = c + hw * x;
                        let v = g(nu);
                        if v != C64::new(0.0, 0.0) {
                            nodes.push(nu);
                            weights.push(v * (hw * wt));
                        }
                    }
                }
            }
            for (o, &eta) in out.iter_mut().zip(&etas) {
                let k = omega * eta;
                let mut s = C64::new(0.0, 0.0);
                for (nu, w) in nodes.iter().zip(&weights) {
                    s += w * C64::from_polar(1.0, k * nu);
                }
                *o = (*o + s) * norm;
            }
            Ok(out)
        }
        QuadratureScheme::Adaptive => etas
            .iter()
            .map(|&eta| {
                let k = omega * eta;
                adaptive_gk(|nu| g(nu) * C64::from_polar(1.0, k * nu), nu_lo, nu_hi, ADAPTIVE_TOL, 200_000)
                    .map(|v| v * norm)
                    .ok_or_else(|| Error::QuadratureUnconverged(format!("half-line transform at η = {eta}")))
            })
            .collect(),
    }
}

/// The two one-sided pieces `b₊`, `b₋` of the separatrix map, without phases.
pub fn symbol_map_branches(a: &SymbolFunction, p: &MapParams, scheme: QuadratureScheme) -> Result<(Vec<C64>, Vec<C64>)> {
    p.validate()?;
    let plus = half_line_transform(a, p.hbar, p.gamma, 1.0, 1.0, scheme)?;
    let minus = half_line_transform(a, p.hbar, p.gamma, -1.0, 1.0, scheme)?;
    Ok((plus, minus))
}

fn branch_phase(s: f64, hbar: f64) -> Result<C64> {
    let ph = (s + PI / 2.0) / hbar;
    if ph.abs() > 1e12 {
        return Err(Error::PhasePrecisionLoss(ph));
    }
    Ok(C64::from_polar(1.0, ph))
}

/// `Ua = e^{i(S⁺+π/2)/ħ} b₊ + e^{i(S⁻+π/2)/ħ} b₋` on the grid of `a`.
pub fn symbol_map_u(a: &SymbolFunction, p: &MapParams) -> Result<SymbolFunction> {
    symbol_map_u_with(a, p, QuadratureScheme::Graded)
}

pub fn symbol_map_u_with(a: &SymbolFunction, p: &MapParams, scheme: QuadratureScheme) -> Result<SymbolFunction> {
    let (plus, minus) = symbol_map_branches(a, p, scheme)?;
    let (ep, em) = (branch_phase(p.s_plus, p.hbar)?, branch_phase(p.s_minus, p.hbar)?);
    let values = plus.iter().zip(&minus).map(|(b, c)| ep * b + em * c).collect();
    SymbolFunction::new(a.grid, values)
}

/// Admissible iteration depth `log(1/ħ) / log log(1/ħ)`.
pub fn iteration_bound(hbar: f64) -> f64 {
    let l = (1.0 / hbar).ln();
    l / l.ln()
}

#[derive(Clone, Debug)]
pub struct Iteration {
    pub symbol: SymbolFunction,
    /// `‖Uᵏa‖` for `k = 0..=n`.
    pub norms: Vec<f64>,
}

impl Iteration {
    /// Largest `|‖Uᵏa‖ - ‖a‖|`.
    pub fn norm_deviation(&self) -> f64 {
        self.norms.iter().map(|n| (n - self.norms[0]).abs()).fold(0.0, f64::max)
    }
}

/// `Uⁿa`, warning when `n` exceeds the admissible depth.
pub fn iterate_symbol_map(a: &SymbolFunction, n: usize, p: &MapParams) -> Result<Diagnosed<Iteration>> {
    p.validate()?;
    let mut warnings = Vec::new();
    let bound = iteration_bound(p.hbar);
    if n as f64 > bound {
        warnings.push(Warning::IterationDepth { n, bound });
    }
    let mut symbol = a.clone();
    let mut norms = vec![a.norm()];
    for _ in 0..n {
        symbol = symbol_map_u(&symbol, p)?;
        norms.push(symbol.norm());
    }
    Ok(Diagnosed { value: Iteration { symbol, norms }, warnings })
}

#[derive(Clone, Debug)]
pub struct HeteroclinicResult {
    pub symbol: SymbolFunction,
    /// `(1/2 + 1/μ₀) log(1/ħ) - t₀`.
    pub travel_time: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeteroclinicParams {
    pub theta0: f64,
    pub mu0: f64,
    pub s_plus: f64,
    /// Maslov index of the connecting curve.
    pub sigma: i32,
    pub hbar: f64,
    pub gamma: f64,
    pub t0: f64,
}

pub fn travel_time(mu0: f64, hbar: f64, t0: f64) -> f64 {
    (0.5 + 1.0 / mu0) * (1.0 / hbar).ln() - t0
}

/// Inversion kernel `a(1/η)(1/η)ρ(ηħ^γ)` on `η > 0`, then `M̃_θ₀`, then `e^{i(S⁺ + σπ/2)/ħ}`.
pub fn heteroclinic_map(a: &SymbolFunction, hp: &HeteroclinicParams) -> Result<HeteroclinicResult> {
    MapParams { hbar: hp.hbar, gamma: hp.gamma, s_plus: hp.s_plus, s_minus: hp.s_plus }.validate()?;
    if !(hp.mu0 > 0.0) {
        return Err(Error::InvalidArgument(format!("μ₀ = {} must be positive", hp.mu0)));
    }
    let g = inversion_step(a, hp.hbar, hp.gamma, 1.0)?;
    let rotated = metaplectic_rotation(hp.theta0, &g)?;
    let ph = (hp.s_plus + hp.sigma as f64 * PI / 2.0) / hp.hbar;
    if ph.abs() > 1e12 {
        return Err(Error::PhasePrecisionLoss(ph));
    }
    Ok(HeteroclinicResult {
        symbol: rotated.value.scale(C64::from_polar(1.0, ph)),
        travel_time: travel_time(hp.mu0, hp.hbar, hp.t0),
        warnings: rotated.warnings,
    })
}

/// `±a(±1/η)(1/η)ρ(±ηħ^γ)` supported on `±η > 0`.
fn inversion_step(a: &SymbolFunction, hbar: f64, gamma: f64, sign: f64) -> Result<SymbolFunction> {
    let h_g = hbar.powf(gamma);
    SymbolFunction::from_fn(a.grid, |eta| {
        if sign * eta <= 0.0 {
            C64::new(0.0, 0.0)
        } else {
            a.eval(sign / eta) * (sign * rho(sign * eta * h_g) / eta)
        }
    })
}

/// `∫ ξ dx` along a separatrix branch, Simpson in the curve parameter with the exact velocity.
pub fn lobe_action(sys: &HamiltonianSystem, branch: Branch, ds: f64) -> Result<f64> {
    let curve = separatrix(sys, branch, SeparatrixOptions { ds, ..SeparatrixOptions::default() })?;
    let ts = curve.time_scale();
    let f: Vec<f64> = curve.points.iter().map(|&z| z.1 * sys.grad(z).1 * ts).collect();
    Ok(simpson(&f, curve.s[1] - curve.s[0]))
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 3 {
        return f.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    }
    let m = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let mut s = f[0] + f[m];
    for (k, v) in f.iter().enumerate().take(m).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mut total = s * h / 3.0;
    if m < n - 1 {
        total += h * (-f[n - 3] + 8.0 * f[n - 2] + 5.0 * f[n - 1]) / 12.0;
    }
    total
}

/// `(S⁺, S⁻)`: actions of the two separatrix branches leaving the origin.
pub fn branch_actions(sys: &HamiltonianSystem) -> Result<(f64, f64)> {
    Ok((lobe_action(sys, Branch::Positive, 2e-3)?, lobe_action(sys, Branch::Negative, 2e-3)?))
}

/// Action of one separatrix arc of `ξ²/2 + cos x - 1`, computed once.
pub fn pendulum_arc_action() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| lobe_action(&HamiltonianSystem::pendulum(), Branch::Positive, 1e-3).expect("pendulum separatrix"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LatticeModel {
    Pendulum,
    Harper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Step {
    Plus,
    Minus,
    Down,
    Left,
    Right,
    Up,
}

impl Step {
    pub fn symbol(self) -> char {
        match self {
            Step::Plus => '+',
            Step::Minus => '-',
            Step::Down => 'D',
            Step::Left => 'L',
            Step::Right => 'R',
            Step::Up => 'U',
        }
    }

    pub fn from_symbol(c: char) -> Option<Step> {
        Some(match c {
            '+' => Step::Plus,
            '-' | '−' => Step::Minus,
            'D' => Step::Down,
            'L' => Step::Left,
            'R' => Step::Right,
            'U' => Step::Up,
            _ => return None,
        })
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::Plus => (1, 1),
            Step::Minus => (-1, -1),
            Step::Down => (0, -1),
            Step::Left => (-1, 0),
            Step::Right => (1, 0),
            Step::Up => (0, 1),
        }
    }
}

impl LatticeModel {
    /// Allowed steps in lexicographic order of their symbols.
    pub fn steps(self) -> &'static [Step] {
        match self {
            LatticeModel::Pendulum => &[Step::Plus, Step::Minus],
            LatticeModel::Harper => &[Step::Down, Step::Left, Step::Right, Step::Up],
        }
    }
}

pub const MAX_PATH_LENGTH: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePath {
    pub model: LatticeModel,
    pub steps: Vec<Step>,
}

impl LatticePath {
    pub fn new(model: LatticeModel, steps: Vec<Step>) -> Result<Self> {
        if let Some(s) = steps.iter().find(|s| !model.steps().contains(s)) {
            return Err(Error::InvalidArgument(format!("step {} not allowed for {model:?}", s.symbol())));
        }
        Ok(LatticePath { model, steps })
    }

    pub fn parse(model: LatticeModel, s: &str) -> Result<Self> {
        let steps = s
            .chars()
            .map(|c| Step::from_symbol(c).ok_or_else(|| Error::InvalidArgument(format!("unknown step {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, steps)
    }

    pub fn vertices(&self) -> Vec<(i64, i64)> {
        let mut v = vec![(0, 0)];
        for s in &self.steps {
            let (i, j) = *v.last().unwrap();
            let (di, dj) = s.delta();
            v.push((i + di, j + dj));
        }
        v
    }

    pub fn endpoint(&self) -> (i64, i64) {
        *self.vertices().last().unwrap()
    }

    pub fn has_straight_run(&self) -> bool {
        self.steps.windows(2).any(|w| w[0] == w[1])
    }

    pub fn reversed(&self) -> LatticePath {
        let opposite = |s: Step| match s {
            Step::Plus => Step::Minus,
            Step::Minus => Step::Plus,
            Step::Down => Step::Up,
            Step::Up => Step::Down,
            Step::Left => Step::Right,
            Step::Right => Step::Left,
        };
        LatticePath { model: self.model, steps: self.steps.iter().rev().map(|&s| opposite(s)).collect() }
    }
}

impl std::fmt::Display for LatticePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.steps {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

/// All walks of length `n`, lexicographic in the step sequence.
pub fn enumerate_paths(model: LatticeModel, n: usize) -> Result<Vec<LatticePath>> {
    enumerate_paths_with(model, n, false)
}

/// Same, optionally dropping walks with two consecutive equal steps.
pub fn enumerate_paths_with(model: LatticeModel, n: usize, no_straight_runs: bool) -> Result<Vec<LatticePath>> {
    let k = model.steps().len() as u128;
    if n > MAX_PATH_LENGTH {
        return Err(Error::TooManyPaths(k.pow(n as u32)));
    }
    let mut paths: Vec<Vec<Step>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(paths.len() * k as usize);
        for p in &paths {
            for &s in model.steps() {
                if no_straight_runs && p.last() == Some(&s) {
                    continue;
                }
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        paths = next;
    }
    Ok(paths.into_iter().map(|steps| LatticePath { model, steps }).collect())
}

/// `S_Γ`: arc actions for the pendulum, `(1/2)∮ p dq - q dp` along the chain for Harper.
pub fn path_action(path: &LatticePath) -> f64 {
    match path.model {
        LatticeModel::Pendulum => path.steps.len() as f64 * pendulum_arc_action(),
        LatticeModel::Harper => {
            let v = path.vertices();
            let twice: i64 = v.windows(2).map(|w| w[0].1 * w[1].0 - w[0].0 * w[1].1).sum();
            twice as f64 / 2.0
        }
    }
}

/// Apply one directional kernel.
pub fn step_symbol(step: Step, a: &SymbolFunction, hbar: f64, gamma: f64) -> Result<SymbolFunction> {
    let values = match step {
        Step::Plus | Step::Up => half_line_transform(a, hbar, gamma, 1.0, -1.0, QuadratureScheme::Graded)?,
        Step::Minus | Step::Down => half_line_transform(a, hbar, gamma, -1.0, 1.0, QuadratureScheme::Graded)?,
        Step::Right => return inversion_step(a, hbar, gamma, 1.0),
        Step::Left => return inversion_step(a, hbar, gamma, -1.0),
    };
    SymbolFunction::new(a.grid, values)
}

/// `V_Γ a`: the step kernels applied in path order.
pub fn path_symbol(path: &LatticePath, a: &SymbolFunction, hbar: f64, gamma: f64) -> Result<SymbolFunction> {
    MapParams { hbar, gamma, s_plus: 0.0, s_minus: 0.0 }.validate()?;
    let mut s = a.clone();
    for &step in &path.steps {
        s = step_symbol(step, &s, hbar, gamma)?;
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSum {
    pub value: C64,
    /// Number of walks ending at the endpoint.
    pub terms: usize,
}

/// `Σ e^{iS_Γ/ħ} ⟨a, V_Γ b⟩` over the walks of length `n` ending at `endpoint`.
pub fn path_sum_element(
    model: LatticeModel,
    a: &SymbolFunction,
    b: &SymbolFunction,
    endpoint: (i64, i64),
    n: usize,
    hbar: f64,
    gamma: f64,
    no_straight_runs: bool,
) -> Result<PathSum> {
    let paths: Vec<LatticePath> = enumerate_paths_with(model, n, no_straight_runs)?.into_iter().filter(|p| p.endpoint() == endpoint).collect();
    let mut value = C64::new(0.0, 0.0);
    for p in &paths {
        let v = path_symbol(p, b, hbar, gamma)?;
        value += C64::from_polar(1.0, path_action(p) / hbar) * a.inner(&v)?;
    }
    Ok(PathSum { value, terms: paths.len() })
}

/// Phase-space point `(q, p) = (π(i - j), π(i + j))` of a Harper lattice site.
pub fn harper_site(i: i64, j: i64) -> (f64, f64) {
    (PI * (i - j) as f64, PI * (i + j) as f64)
}

/// Saddles of `cos ξ - cos x` on the torus `[0, 2π)²`.
pub const HARPER_SADDLES: [(f64, f64); 2] = [(0.0, 0.0), (PI, PI)];

/// Torus distance from `z` to the nearest Harper saddle.
pub fn distance_to_saddles(z: (f64, f64)) -> f64 {
    let wrap = |d: f64| {
        let r = d.rem_euclid(2.0 * PI);
        r.min(2.0 * PI - r)
    };
    HARPER_SADDLES.iter().map(|s| wrap(z.0 - s.0).hypot(wrap(z.1 - s.1))).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapRow {
    pub label: String,
    pub q: f64,
    pub p: f64,
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeOverlapReport {
    pub n: usize,
    pub hbar: f64,
    pub time: f64,
    pub lattice: Vec<OverlapRow>,
    pub probes: Vec<OverlapRow>,
}

impl LatticeOverlapReport {
    /// Smallest lattice overlap over the largest probe overlap.
    pub fn ratio(&self) -> f64 {
        let lo = self.lattice.iter().map(|r| r.overlap).fold(f64::INFINITY, f64::min);
        let hi = self.probes.iter().map(|r| r.overlap).fold(0.0, f64::max);
        lo / hi
    }
}

/// `|⟨ψ_(0,0), e^{-itH/ħ} ψ_z⟩|` for the Harper operator on `N` sites at `t = log(1/ħ)`,
/// for lattice sites reached in one step and for the given probe points.
pub fn harper_lattice_overlaps(n: usize, probes: &[(f64, f64)]) -> Result<LatticeOverlapReport> {
    let op = harper_operator(n)?;
    let hbar = op.hbar;
    let t = (1.0 / hbar).ln();
    let grid = Grid::torus(n);
    let state = |q: f64, p: f64| make_coherent_state(&CoherentStateSpec::gaussian(q, p, hbar), grid);
    let origin = state(0.0, 0.0)?;
    let back = WaveFunction::new(grid, torus_propagate(&origin.values, &op, -t)?, hbar)?;
    let overlap = |q: f64, p: f64| -> Result<f64> { Ok(inner_product(&back, &state(q, p)?)?.norm()) };
    let mut lattice = Vec::new();
    for s in LatticeModel::Harper.steps() {
        let (i, j) = s.delta();
        let (q, p) = harper_site(i, j);
        lattice.push(OverlapRow { label: format!("({i},{j})"), q, p, overlap: overlap(q, p)? });
    }
    let probes = probes
        .iter()
        .map(|&(q, p)| Ok(OverlapRow { label: "probe".into(), q, p, overlap: overlap(q, p)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatticeOverlapReport { n, hbar, time: t, lattice, probes })
}

/// `∫ P(z(s)) |a(±e^{s-t'})|² e^{s-t'} ds` along one separatrix branch.
pub fn lagrangian_expectation(p: &ObservableSymbol, a: &SymbolFunction, t_prime: f64, curve: &SeparatrixCurve) -> Result<f64> {
    let sg = curve.branch.sign();
    let density = |s: f64| {
        let u = (s - t_prime).exp();
        a.eval(sg * u).norm_sqr() * u
    };
    let (s0, s1) = (curve.s[0], *curve.s.last().unwrap());
    let (u0, u1) = ((s0 - t_prime).exp(), (s1 - t_prime).exp());
    let tail = |lo: f64, hi: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        adaptive_gk(|u| C64::new(a.eval(sg * u).norm_sqr(), 0.0), lo, hi, 1e-12, 100_000)
            .map(|v| v.re)
            .ok_or_else(|| Error::QuadratureUnconverged("density tail".into()))
    };
    let far = sg * a.grid.start().abs().max((a.grid.start() + a.grid.length()).abs());
    let lost = tail(0.0, u0)? + tail(u1, far.abs())?;
    if lost > 1e-6 {
        return Err(Error::SupportTruncated(lost));
    }
    let f: Vec<f64> = curve.s.iter().zip(&curve.points).map(|(&s, &z)| p.eval(z.0, z.1) * density(s)).collect();
    let ds = curve.s[1] - curve.s[0];
    Ok(f.windows(2).map(|w| 0.5 * ds * (w[0] + w[1])).sum())
}

/// Both branches: the Lagrangian prediction for a packet started at the saddle.
pub fn lagrangian_prediction(p: &ObservableSymbol, a: &SymbolFunction, t_prime: f64, sys: &HamiltonianSystem) -> Result<f64> {
    let mut total = 0.0;
    for b in [Branch::Positive, Branch::Negative] {
        let curve = separatrix(sys, b, SeparatrixOptions::default())?;
        total += lagrangian_expectation(p, a, t_prime, &curve)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScanSeries {
    pub times: Vec<f64>,
    pub autocorrelation: Vec<f64>,
    pub ipr: Vec<f64>,
}

impl ScanSeries {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,autocorrelation,ipr")?;
        for k in 0..self.times.len() {
            writeln!(w, "{:.6e},{:.12e},{:.12e}", self.times[k], self.autocorrelation[k], self.ipr[k])?;
        }
        Ok(())
    }
}

/// `|⟨ψ⁰, ψᵗ⟩|` and `IPR(ψᵗ)` at each time.
pub fn autocorrelation_scan(mut propagate: impl FnMut(f64) -> Result<WaveFunction>, psi0: &WaveFunction, times: &[f64]) -> Result<ScanSeries> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("scan times must be sorted".into()));
    }
    let mut out = ScanSeries::default();
    for &t in times {
        let psi = propagate(t)?;
        out.times.push(t);
        out.autocorrelation.push(fidelity(psi0, &psi)?.min(1.0));
        out.ipr.push(psi.ipr());
    }
    Ok(out)
}

/// Exact evolution that can be queried at increasing times.
pub struct Evolution {
    psi0: WaveFunction,
    kind: EvolutionKind,
}

enum EvolutionKind {
    Split { kappa: f64, v: crate::classical::F1, dt: f64, state: WaveFunction, now: f64 },
    /// `h = xξ`: `ψᵗ(x) = e^{-t/2} ψ⁰(e^{-t} x)`.
    Dilation { spec: CoherentStateSpec },
}

impl Evolution {
    pub fn new(sys: &HamiltonianSystem, spec: &CoherentStateSpec, grid: Grid, dt: f64) -> Result<Self> {
        let psi0 = make_coherent_state(spec, grid)?;
        if sys.name == "linear-hyperbolic" {
            return Ok(Evolution { psi0, kind: EvolutionKind::Dilation { spec: spec.clone() } });
        }
        let (kappa, v) = sys
            .kinetic_potential_parts()
            .ok_or_else(|| Error::UnsupportedSymbolForm(format!("{} has no exact propagation route", sys.name)))?;
        Ok(Evolution { kind: EvolutionKind::Split { kappa, v, dt, state: psi0.clone(), now: 0.0 }, psi0 })
    }

    pub fn initial(&self) -> &WaveFunction {
        &self.psi0
    }

    /// State at time `t`; split-step evolutions only move forward.
    pub fn at(&mut self, t: f64) -> Result<WaveFunction> {
        match &mut self.kind {
            EvolutionKind::Split { kappa, v, dt, state, now } => {
                if t < *now - 1e-12 {
                    return Err(Error::InvalidArgument(format!("time {t} precedes current time {now}")));
                }
                let span = t - *now;
                if span > 0.0 {
                    let n = ((span / *dt).ceil() as usize).max(1);
                    let v = v.clone();
                    let mut stepper = SplitStep::new(state.grid, state.hbar, *kappa, &move |x| v(x), span / n as f64);
                    stepper.advance(&mut state.values, n);
                    *now = t;
                    let leak = state.edge_mass(0.02);
                    if leak > BOUNDARY_TOLERANCE {
                        return Err(Error::BoundaryMassLeak(leak));
                    }
                }
                Ok(state.clone())
            }
            EvolutionKind::Dilation { spec } => {
                let sq = spec.hbar_eff().sqrt();
                let (e, amp) = ((-t).exp(), (-t / 2.0).exp());
                let g = self.psi0.grid;
                let values = g
                    .points()
                    .into_iter()
                    .map(|x| {
                        let y = e * x;
                        spec.symbol.eval((y - spec.q) / sq) * C64::from_polar(amp * sq.powf(-0.5), spec.p * y / spec.hbar)
                    })
                    .collect();
                WaveFunction::new(g, values, spec.hbar)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
    /// Height above the lowest sample between `t_min` and the peak.
    pub prominence: f64,
}

/// Global maximum past `t_min`, refined by a parabola through the three bracketing samples.
pub fn find_peak(times: &[f64], values: &[f64], t_min: f64, min_prominence: f64) -> Result<Peak> {
    let first = times.iter().position(|&t| t > t_min).ok_or_else(|| Error::PeakNotFound(format!("no samples past t = {t_min}")))?;
    let k = (first..values.len())
        .max_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap())
        .ok_or_else(|| Error::PeakNotFound("empty scan".into()))?;
    if k == first || k + 1 == values.len() {
        return Err(Error::PeakNotFound(format!("maximum at the scan boundary t = {:.3}", times[k])));
    }
    let trough = values[first..k].iter().cloned().fold(f64::INFINITY, f64::min);
    let prominence = values[k] - trough;
    if prominence < min_prominence {
        return Err(Error::PeakNotFound(format!("prominence {prominence:.3} below {min_prominence}")));
    }
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let h = times[k + 1] - times[k];
    let den = y0 - 2.0 * y1 + y2;
    let off = if den.abs() > 1e-300 { (0.5 * (y0 - y2) / den).clamp(-1.0, 1.0) } else { 0.0 };
    let value = (y1 - 0.25 * (y0 - y2) * off).min(1.0);
    Ok(Peak { time: times[k] + off * h, value, prominence })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RevivalOptions {
    /// Earliest admissible peak, in unit-rate time.
    pub t_min: f64,
    /// Scan up to `span·log(1/ħ) + extra` (unit-rate).
    pub span: f64,
    pub extra: f64,
    /// Scan step as a fraction of `log(1/ħ)`.
    pub resolution: f64,
    pub dt: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Largest momentum the grid must resolve.
    pub xi_max: f64,
    pub refine: usize,
    pub min_prominence: f64,
}

impl Default for RevivalOptions {
    fn default() -> Self {
        RevivalOptions {
            t_min: 1.0,
            span: 1.5,
            extra: 2.0,
            resolution: 0.02,
            dt: 1e-3,
            x_min: -2.5,
            x_max: 2.5,
            xi_max: 0.6,
            refine: 1,
            min_prominence: 0.2,
        }
    }
}

/// Line grid resolving the packet width and momenta up to `xi_max`.
pub fn scan_grid(spec: &CoherentStateSpec, opts: &RevivalOptions) -> Result<Grid> {
    let len = opts.x_max - opts.x_min;
    let sq = spec.hbar_eff().sqrt();
    let by_width = len / (sq / 16.0);
    let by_momentum = len * (opts.xi_max + 8.0 * sq) / (0.5 * PI * spec.hbar);
    let n = (by_width.max(by_momentum).ceil() as usize).next_power_of_two() * opts.refine.max(1);
    Grid::line(opts.x_min, opts.x_max, n)
}

/// Expansion rate at the fixed point nearest the packet centre.
pub fn saddle_rate(sys: &HamiltonianSystem, spec: &CoherentStateSpec) -> Result<f64> {
    let z = sys.fixed_point_near((spec.q, spec.p))?;
    Ok(NormalChart::at(sys, z)?.rate)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevivalRow {
    pub hbar: f64,
    pub log_inv_hbar: f64,
    /// Unit-rate peak time.
    pub peak: Peak,
    /// Unit-rate scan times.
    pub series: ScanSeries,
}

/// Autocorrelation scan in unit-rate time `τ = λt` and its first peak past `t_min`.
pub fn revival_scan(sys: &HamiltonianSystem, spec: &CoherentStateSpec, opts: &RevivalOptions) -> Result<(ScanSeries, Result<Peak>)> {
    let rate = saddle_rate(sys, spec)?;
    let l = (1.0 / spec.hbar).ln();
    let step = opts.resolution * l;
    let tau_max = opts.span * l + opts.extra;
    let taus: Vec<f64> = (0..=((tau_max / step).ceil() as usize)).map(|k| k as f64 * step).collect();
    let mut ev = Evolution::new(sys, spec, scan_grid(spec, opts)?, opts.dt)?;
    let psi0 = ev.initial().clone();
    let mut series = autocorrelation_scan(|tau| ev.at(tau / rate), &psi0, &taus)?;
    series.times = taus;
    let peak = find_peak(&series.times, &series.autocorrelation, opts.t_min, opts.min_prominence);
    Ok((series, peak))
}

pub fn revival_row(sys: &HamiltonianSystem, spec: &CoherentStateSpec, opts: &RevivalOptions) -> Result<RevivalRow> {
    let (series, peak) = revival_scan(sys, spec, opts)?;
    Ok(RevivalRow { hbar: spec.hbar, log_inv_hbar: (1.0 / spec.hbar).ln(), peak: peak?, series })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RevivalReport {
    pub rows: Vec<RevivalRow>,
    /// `τ* = A log(1/ħ) + B`.
    pub a: f64,
    pub b: f64,
    pub r2: f64,
    pub t0: f64,
}

impl RevivalReport {
    pub fn from_rows(rows: Vec<RevivalRow>, t0: f64) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InvalidArgument("revival fit needs at least three ħ values".into()));
        }
        let x: Vec<f64> = rows.iter().map(|r| r.log_inv_hbar).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.peak.time).collect();
        let fit = linear_fit(&x, &y);
        Ok(RevivalReport { rows, a: fit.slope, b: fit.intercept, r2: fit.r2, t0 })
    }

    /// `|B + t₀|`.
    pub fn intercept_gap(&self) -> f64 {
        (self.b + self.t0).abs()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "hbar,log_inv_hbar,peak_time,peak_value,prominence")?;
        for r in &self.rows {
            writeln!(w, "{:.6e},{:.9},{:.9},{:.9},{:.9}", r.hbar, r.log_inv_hbar, r.peak.time, r.peak.value, r.peak.prominence)?;
        }
        Ok(())
    }
}

/// Revival peak times across `ħ` with a linear fit in `log(1/ħ)`; `spec.hbar` is replaced per row.
pub fn revival_time_scaling(sys: &HamiltonianSystem, spec: &CoherentStateSpec, hbars: &[f64], opts: &RevivalOptions) -> Result<RevivalReport> {
    if hbars.len() < 3 {
        return Err(Error::InvalidArgument("revival fit needs at least three ħ values".into()));
    }
    let rows = hbars
        .iter()
        .map(|&h| revival_row(sys, &CoherentStateSpec { hbar: h, ..spec.clone() }, opts))
        .collect::<Result<Vec<_>>>()?;
    let t0 = t0_default(sys, Branch::Positive)?.t0;
    RevivalReport::from_rows(rows, t0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionReport {
    /// Unit-rate time of the best match.
    pub peak_time: f64,
    pub peak_fidelity: f64,
    /// `n(log(1/ħ) - t₀)`.
    pub predicted_time: f64,
    /// `(τ, IPR)` of the exact state.
    pub localization: Vec<(f64, f64)>,
    pub norm_deviation: f64,
    pub warnings: Vec<String>,
}

/// Symbol of the `n`-fold reconstruction in the original coordinates: the map acts in
/// the normal chart at the saddle, reached by a metaplectic rotation.
pub fn reconstructed_symbol(sys: &HamiltonianSystem, a: &SymbolFunction, n: usize, p: &MapParams) -> Result<Diagnosed<Iteration>> {
    let chart = NormalChart::at(sys, sys.fixed_point_near((0.0, 0.0))?)?;
    let theta = chart.angle();
    let start = metaplectic_rotation(-theta, a)?;
    let mut it = iterate_symbol_map(&start.value, n, p)?;
    let back = metaplectic_rotation(theta, &it.value.symbol)?;
    it.value.symbol = back.value;
    it.warnings.extend(start.warnings);
    it.warnings.extend(back.warnings);
    Ok(it)
}

/// Fidelity between the exact state and `ψ^{Uⁿa}` over unit-rate times `taus`.
pub fn reconstruction_scan(
    sys: &HamiltonianSystem,
    spec: &CoherentStateSpec,
    n: usize,
    p: &MapParams,
    taus: &[f64],
    opts: &RevivalOptions,
) -> Result<ReconstructionReport> {
    let rate = saddle_rate(sys, spec)?;
    let it = reconstructed_symbol(sys, &spec.symbol, n, p)?;
    let grid = scan_grid(spec, opts)?;
    let target_spec = CoherentStateSpec { symbol: it.value.symbol.clone().normalized(), ..spec.clone() };
    let target = make_coherent_state(&target_spec, grid)?;
    let mut ev = Evolution::new(sys, spec, grid, opts.dt)?;
    let mut best = (0.0, -1.0);
    let mut localization = Vec::new();
    for &tau in taus {
        let psi = ev.at(tau / rate)?;
        let f = fidelity(&target, &psi)?;
        if f > best.1 {
            best = (tau, f);
        }
        localization.push((tau, psi.ipr()));
    }
    let t0 = t0_default(sys, Branch::Positive)?.t0;
    Ok(ReconstructionReport {
        peak_time: best.0,
        peak_fidelity: best.1.clamp(0.0, 1.0),
        predicted_time: n as f64 * ((1.0 / p.hbar).ln() - t0),
        localization,
        norm_deviation: it.value.norm_deviation(),
        warnings: it.warnings.iter().map(|w| w.to_string()).collect(),
    })
}
