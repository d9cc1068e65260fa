//! Hamiltonian flows in one degree of freedom: trajectories, tangent maps,
//! growth rates, separatrices and the homoclinic constant `t0`.

use crate::error::{Error, Result};
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Arc;

pub type Point = (f64, f64);
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Operator 2-norm of a 2×2 matrix.
pub fn norm2(m: &Mat2) -> f64 {
    let s = 0.5 * (m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2));
    let d = det(m);
    (s + (s * s - d * d).max(0.0).sqrt()).sqrt()
}

pub type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type F2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type G2 = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;
type H2 = Arc<dyn Fn(f64, f64) -> Mat2 + Send + Sync>;

/// `h = T(ξ) + V(x)` with first and second derivatives.
#[derive(Clone)]
pub struct Separable {
    pub t: F1,
    pub dt: F1,
    pub ddt: F1,
    pub v: F1,
    pub dv: F1,
    pub ddv: F1,
    /// `κ` when `T(ξ) = κξ²`, used by the split-step quantization.
    pub kinetic: Option<f64>,
}

#[derive(Clone)]
enum Form {
    Separable(Separable),
    General { h: F2, grad: G2, hess: H2 },
}

#[derive(Clone)]
pub struct HamiltonianSystem {
    pub name: String,
    form: Form,
}

impl std::fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HamiltonianSystem({})", self.name)
    }
}

fn f1(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> F1 {
    Arc::new(f)
}

impl HamiltonianSystem {
    pub fn separable(name: &str, s: Separable) -> Self {
        HamiltonianSystem { name: name.into(), form: Form::Separable(s) }
    }

    /// `h = κξ² + V(x)`.
    pub fn kinetic_potential(
        name: &str,
        kappa: f64,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ddv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::separable(
            name,
            Separable {
                t: f1(move |p| kappa * p * p),
                dt: f1(move |p| 2.0 * kappa * p),
                ddt: f1(move |_| 2.0 * kappa),
                v: f1(v),
                dv: f1(dv),
                ddv: f1(ddv),
                kinetic: Some(kappa),
            },
        )
    }

    pub fn general(
        name: &str,
        h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
        hess: impl Fn(f64, f64) -> Mat2 + Send + Sync + 'static,
    ) -> Self {
        HamiltonianSystem { name: name.into(), form: Form::General { h: Arc::new(h), grad: Arc::new(grad), hess: Arc::new(hess) } }
    }

    /// `(ξ² + x²)/2`.
    pub fn harmonic() -> Self {
        Self::kinetic_potential("harmonic", 0.5, |x| 0.5 * x * x, |x| x, |_| 1.0)
    }

    /// `ξ²/2`.
    pub fn free() -> Self {
        Self::kinetic_potential("free", 0.5, |_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// `ξ² + x²(x² - 1)`.
    pub fn double_well() -> Self {
        Self::kinetic_potential(
            "double-well",
            1.0,
            |x| x * x * (x * x - 1.0),
            |x| 4.0 * x * x * x - 2.0 * x,
            |x| 12.0 * x * x - 2.0,
        )
    }

    /// `ξ² + x⁴`, a stable anharmonic oscillator.
    pub fn quartic_oscillator() -> Self {
        Self::kinetic_potential("quartic", 1.0, |x| x.powi(4), |x| 4.0 * x.powi(3), |x| 12.0 * x * x)
    }

    /// `ξ²/2 + cos x - 1`.
    pub fn pendulum() -> Self {
        Self::kinetic_potential("pendulum", 0.5, |x| x.cos() - 1.0, |x| -x.sin(), |x| -x.cos())
    }

    /// `(ξ + x)²/4 + cos((ξ - x)/√2) - 1`; near the origin `h ≈ xξ`.
    pub fn pendulum_rotated() -> Self {
        Self::general(
            "pendulum-rotated",
            |x, p| (p + x).powi(2) / 4.0 + ((p - x) / SQRT_2).cos() - 1.0,
            |x, p| {
                let s = ((p - x) / SQRT_2).sin() / SQRT_2;
                ((p + x) / 2.0 + s, (p + x) / 2.0 - s)
            },
            |x, p| {
                let c = ((p - x) / SQRT_2).cos() / 2.0;
                [[0.5 - c, 0.5 + c], [0.5 + c, 0.5 - c]]
            },
        )
    }

    /// `cos ξ - cos x` (Harper).
    pub fn harper() -> Self {
        Self::separable(
            "harper",
            Separable {
                t: f1(|p| p.cos()),
                dt: f1(|p| -p.sin()),
                ddt: f1(|p| -p.cos()),
                v: f1(|x| -x.cos()),
                dv: f1(|x| x.sin()),
                ddv: f1(|x| x.cos()),
                kinetic: None,
            },
        )
    }

    /// `π²(cos((ξ + x)/2π) - cos((ξ - x)/2π))`.
    pub fn harper_rotated() -> Self {
        let k = 1.0 / (2.0 * PI);
        Self::general(
            "harper-rotated",
            move |x, p| PI * PI * (((p + x) * k).cos() - ((p - x) * k).cos()),
            move |x, p| {
                let a = ((p + x) * k).sin() * PI / 2.0;
                let b = ((p - x) * k).sin() * PI / 2.0;
                (-a - b, -a + b)
            },
            move |x, p| {
                let a = ((p + x) * k).cos() / 4.0;
                let b = ((p - x) * k).cos() / 4.0;
                [[-a + b, -a - b], [-a - b, -a + b]]
            },
        )
    }

    /// `xξ`.
    pub fn linear_hyperbolic() -> Self {
        Self::general("linear-hyperbolic", |x, p| x * p, |x, p| (p, x), |_, _| [[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "harmonic" => Self::harmonic(),
            "free" => Self::free(),
            "double-well" => Self::double_well(),
            "quartic" => Self::quartic_oscillator(),
            "pendulum" => Self::pendulum(),
            "pendulum-rotated" => Self::pendulum_rotated(),
            "harper" => Self::harper(),
            "harper-rotated" => Self::harper_rotated(),
            "linear-hyperbolic" => Self::linear_hyperbolic(),
            _ => return None,
        })
    }

    pub fn h(&self, z: Point) -> f64 {
        match &self.form {
            Form::Separable(s) => (s.t)(z.1) + (s.v)(z.0),
            Form::General { h, .. } => h(z.0, z.1),
        }
    }

    /// `(∂_x h, ∂_ξ h)`.
    pub fn grad(&self, z: Point) -> (f64, f64) {
        match &self.form {
            Form::Separable(s) => ((s.dv)(z.0), (s.dt)(z.1)),
            Form::General { grad, .. } => grad(z.0, z.1),
        }
    }

    pub fn hess(&self, z: Point) -> Mat2 {
        match &self.form {
            Form::Separable(s) => [[(s.ddv)(z.0), 0.0], [0.0, (s.ddt)(z.1)]],
            Form::General { hess, .. } => hess(z.0, z.1),
        }
    }

    pub fn separable_parts(&self) -> Option<&Separable> {
        match &self.form {
            Form::Separable(s) => Some(s),
            _ => None,
        }
    }

    /// `(κ, V)` when `h = κξ² + V(x)`.
    pub fn kinetic_potential_parts(&self) -> Option<(f64, F1)> {
        let s = self.separable_parts()?;
        Some((s.kinetic?, s.v.clone()))
    }

    /// Newton iteration for a critical point of `h` starting at `z`.
    pub fn fixed_point_near(&self, z: Point) -> Result<Point> {
        let mut z = z;
        for _ in 0..100 {
            let g = self.grad(z);
            let h = self.hess(z);
            let d = det(&h);
            if d.abs() < 1e-300 {
                return Err(Error::NoConvergence("singular Hessian in fixed-point search".into()));
            }
            let dx = (h[1][1] * g.0 - h[0][1] * g.1) / d;
            let dp = (-h[1][0] * g.0 + h[0][0] * g.1) / d;
            z = (z.0 - dx, z.1 - dp);
            if dx.hypot(dp) < 1e-15 {
                return Ok(z);
            }
        }
        let g = self.grad(z);
        if g.0.hypot(g.1) < 1e-12 {
            Ok(z)
        } else {
            Err(Error::NoConvergence("fixed-point search".into()))
        }
    }
}

/// Symplectic composition coefficients (Yoshida, order 6).
const YOSHIDA6: [f64; 7] = {
    let w1 = -1.177_679_984_178_87;
    let w2 = 0.235_573_213_359_357;
    let w3 = 0.784_513_610_477_560;
    let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
    [w3, w2, w1, w0, w1, w2, w3]
};

const ORDER: i32 = 6;

#[derive(Clone, Copy, Debug)]
struct State {
    z: Point,
    action: f64,
    m: Mat2,
}

fn leapfrog(s: &Separable, st: &mut State, tau: f64, tangent: bool) {
    let half = 0.5 * tau;
    let kick = |st: &mut State, dt: f64| {
        let x = st.z.0;
        st.action -= dt * (s.v)(x);
        st.z.1 -= dt * (s.dv)(x);
        if tangent {
            let k = -dt * (s.ddv)(x);
            st.m = [[st.m[0][0], st.m[0][1]], [st.m[1][0] + k * st.m[0][0], st.m[1][1] + k * st.m[0][1]]];
        }
    };
    kick(st, half);
    let p = st.z.1;
    let tp = (s.dt)(p);
    st.action += tau * (p * tp - (s.t)(p));
    st.z.0 += tau * tp;
    if tangent {
        let k = tau * (s.ddt)(p);
        st.m = [[st.m[0][0] + k * st.m[1][0], st.m[0][1] + k * st.m[1][1]], [st.m[1][0], st.m[1][1]]];
    }
    kick(st, half);
}

fn midpoint(sys: &HamiltonianSystem, st: &mut State, tau: f64, tangent: bool) -> Result<()> {
    let z0 = st.z;
    let mut z1 = {
        let g = sys.grad(z0);
        (z0.0 + tau * g.1, z0.1 - tau * g.0)
    };
    let mut converged = false;
    for _ in 0..50 {
        let m = (0.5 * (z0.0 + z1.0), 0.5 * (z0.1 + z1.1));
        let g = sys.grad(m);
        let r = (z1.0 - z0.0 - tau * g.1, z1.1 - z0.1 + tau * g.0);
        let h = sys.hess(m);
        // Jacobian of the residual: I - (τ/2) J Hess
        let j = [[1.0 - 0.5 * tau * h[0][1], -0.5 * tau * h[1][1]], [0.5 * tau * h[0][0], 1.0 + 0.5 * tau * h[1][0]]];
        let d = det(&j);
        let dx = (j[1][1] * r.0 - j[0][1] * r.1) / d;
        let dp = (-j[1][0] * r.0 + j[0][0] * r.1) / d;
        z1 = (z1.0 - dx, z1.1 - dp);
        if dx.abs() + dp.abs() < 1e-16 * (1.0 + z1.0.abs() + z1.1.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        let m = (0.5 * (z0.0 + z1.0), 0.5 * (z0.1 + z1.1));
        let g = sys.grad(m);
        let r = (z1.0 - z0.0 - tau * g.1).abs() + (z1.1 - z0.1 + tau * g.0).abs();
        if r > 1e-13 * (1.0 + z1.0.abs() + z1.1.abs()) {
            return Err(Error::NoConvergence(format!("implicit midpoint residual {r:e}")));
        }
    }
    let m = (0.5 * (z0.0 + z1.0), 0.5 * (z0.1 + z1.1));
    st.action += m.1 * (z1.0 - z0.0) - tau * sys.h(m);
    if tangent {
        let h = sys.hess(m);
        let a = [[h[0][1], h[1][1]], [-h[0][0], -h[1][0]]];
        let p = [[1.0 + 0.5 * tau * a[0][0], 0.5 * tau * a[0][1]], [0.5 * tau * a[1][0], 1.0 + 0.5 * tau * a[1][1]]];
        let q = [[1.0 - 0.5 * tau * a[0][0], -0.5 * tau * a[0][1]], [-0.5 * tau * a[1][0], 1.0 - 0.5 * tau * a[1][1]]];
        let dq = det(&q);
        let qinv = [[q[1][1] / dq, -q[0][1] / dq], [-q[1][0] / dq, q[0][0] / dq]];
        st.m = mat_mul(&mat_mul(&qinv, &p), &st.m);
    }
    st.z = z1;
    Ok(())
}

fn step(sys: &HamiltonianSystem, st: &mut State, tau: f64, tangent: bool) -> Result<()> {
    for w in YOSHIDA6 {
        match &sys.form {
            Form::Separable(s) => leapfrog(s, st, w * tau, tangent),
            Form::General { .. } => midpoint(sys, st, w * tau, tangent)?,
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// `l(t) = ∫₀ᵗ (ξẋ - h) ds`.
    pub action: Vec<f64>,
    pub energy: Vec<f64>,
    /// Largest per-step local error estimate (step vs two half steps).
    pub max_step_error: f64,
}

impl Trajectory {
    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    pub fn end_action(&self) -> f64 {
        *self.action.last().unwrap()
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,xi,action,energy")?;
        for k in 0..self.times.len() {
            writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", self.times[k], self.points[k].0, self.points[k].1, self.action[k], self.energy[k])?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentFlow {
    pub times: Vec<f64>,
    pub matrices: Vec<Mat2>,
}

impl TangentFlow {
    pub fn end(&self) -> Mat2 {
        *self.matrices.last().unwrap()
    }
}

pub const ENERGY_TOLERANCE: f64 = 1e-8;

fn run(sys: &HamiltonianSystem, z0: Point, t_end: f64, dt: f64, tangent: bool, estimate: bool) -> Result<(Trajectory, TangentFlow)> {
    if !(dt > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {dt}, T = {t_end}")));
    }
    let n = if t_end == 0.0 { 0 } else { (t_end.abs() / dt).ceil().max(1.0) as usize };
    let tau = if n == 0 { 0.0 } else { t_end / n as f64 };
    let mut st = State { z: z0, action: 0.0, m: IDENTITY };
    let e0 = sys.h(z0);
    let mut traj = Trajectory { times: vec![0.0], points: vec![z0], action: vec![0.0], energy: vec![e0], max_step_error: 0.0 };
    let mut tf = TangentFlow { times: vec![0.0], matrices: vec![IDENTITY] };
    for k in 1..=n {
        let prev = st;
        step(sys, &mut st, tau, tangent)?;
        if estimate {
            let mut half = prev;
            step(sys, &mut half, 0.5 * tau, false)?;
            step(sys, &mut half, 0.5 * tau, false)?;
            let err = ((st.z.0 - half.z.0).hypot(st.z.1 - half.z.1)) / (2f64.powi(ORDER) - 1.0);
            traj.max_step_error = traj.max_step_error.max(err);
        }
        let t = k as f64 * tau;
        traj.times.push(t);
        traj.points.push(st.z);
        traj.action.push(st.action);
        traj.energy.push(sys.h(st.z));
        if tangent {
            tf.times.push(t);
            tf.matrices.push(st.m);
        }
    }
    let drift = traj.energy_drift();
    if drift > ENERGY_TOLERANCE {
        return Err(Error::EnergyDriftExceeded(drift));
    }
    Ok((traj, tf))
}

/// Fixed-step sixth-order symmetric composition; `dt` must not exceed `T/100`.
pub fn integrate_flow(sys: &HamiltonianSystem, z0: Point, t_end: f64, dt: f64) -> Result<Trajectory> {
    check_step(t_end, dt)?;
    Ok(run(sys, z0, t_end, dt, false, true)?.0)
}

/// Flow and variational equation `Ṁ = J Hess h(Φ^t z0) M` integrated together.
pub fn tangent_flow(sys: &HamiltonianSystem, z0: Point, t_end: f64, dt: f64) -> Result<TangentFlow> {
    check_step(t_end, dt)?;
    Ok(run(sys, z0, t_end, dt, true, false)?.1)
}

/// Trajectory and tangent flow from a single integration.
pub fn flow_with_tangent(sys: &HamiltonianSystem, z0: Point, t_end: f64, dt: f64) -> Result<(Trajectory, TangentFlow)> {
    run(sys, z0, t_end, dt, true, false)
}

fn check_step(t_end: f64, dt: f64) -> Result<()> {
    if t_end != 0.0 && dt > t_end.abs() / 100.0 + 1e-15 {
        return Err(Error::InvalidArgument(format!("dt = {dt} exceeds T/100 = {}", t_end.abs() / 100.0)));
    }
    Ok(())
}

/// `sup_t log‖dΦ^t‖/t` over the sampled times; zero when the flow never stretches past 10.
pub fn estimate_mu(sys: &HamiltonianSystem, z0: Point, t_end: f64) -> Result<f64> {
    let dt = (t_end / 100.0).min(0.01);
    let tf = tangent_flow(sys, z0, t_end, dt)?;
    let max_norm = tf.matrices.iter().map(norm2).fold(0.0, f64::max);
    if max_norm <= 10.0 {
        return Ok(0.0);
    }
    Ok(tf
        .times
        .iter()
        .zip(&tf.matrices)
        .skip(1)
        .map(|(t, m)| norm2(m).ln() / t)
        .fold(0.0, f64::max))
}

/// Symplectic chart `z = z* + u e₊ + v e₋` at a hyperbolic fixed point, with
/// `h ≈ h(z*) + λ u v`; `e₊` is the unstable direction and `|e₊| = |e₋|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalChart {
    pub origin: Point,
    pub e_plus: Point,
    pub e_minus: Point,
    pub rate: f64,
}

fn cross(a: Point, b: Point) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

impl NormalChart {
    pub fn at(sys: &HamiltonianSystem, z: Point) -> Result<Self> {
        let h = sys.hess(z);
        let d = det(&h);
        if !(d < 0.0) {
            return Err(Error::NotHyperbolic(format!("det Hess = {d} at {z:?}")));
        }
        let lam = (-d).sqrt();
        // A = J Hess = [[h_xξ, h_ξξ], [-h_xx, -h_xξ]]
        let a = [[h[0][1], h[1][1]], [-h[0][0], -h[1][0]]];
        let eig = |l: f64| -> Point {
            let c1 = (a[0][1], l - a[0][0]);
            let c2 = (l - a[1][1], a[1][0]);
            let v = if c1.0.hypot(c1.1) >= c2.0.hypot(c2.1) { c1 } else { c2 };
            let n = v.0.hypot(v.1);
            let v = (v.0 / n, v.1 / n);
            if v.0 < -1e-14 || (v.0.abs() <= 1e-14 && v.1 < 0.0) {
                (-v.0, -v.1)
            } else {
                v
            }
        };
        let ep = eig(lam);
        let mut em = eig(-lam);
        let k = cross(ep, em);
        if k.abs() < 1e-12 {
            return Err(Error::NotHyperbolic("degenerate eigenvectors".into()));
        }
        if k < 0.0 {
            em = (-em.0, -em.1);
        }
        let s = k.abs().sqrt();
        Ok(NormalChart { origin: z, e_plus: (ep.0 / s, ep.1 / s), e_minus: (em.0 / s, em.1 / s), rate: lam })
    }

    /// `(u, v)` of a phase-space point.
    pub fn to_chart(&self, z: Point) -> Point {
        let d = (z.0 - self.origin.0, z.1 - self.origin.1);
        (cross(d, self.e_minus), cross(self.e_plus, d))
    }

    pub fn from_chart(&self, u: f64, v: f64) -> Point {
        (
            self.origin.0 + u * self.e_plus.0 + v * self.e_minus.0,
            self.origin.1 + u * self.e_plus.1 + v * self.e_minus.1,
        )
    }

    /// Rotation angle of the chart when it is orthogonal, `e₊ = (cos θ, sin θ)`.
    pub fn angle(&self) -> f64 {
        self.e_plus.1.atan2(self.e_plus.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparatrixOptions {
    pub delta: f64,
    /// Largest unit-rate time kept on the curve.
    pub s_max: f64,
    /// Unit-rate step.
    pub ds: f64,
}

impl Default for SeparatrixOptions {
    fn default() -> Self {
        SeparatrixOptions { delta: 1e-6, s_max: 14.0, ds: 2e-3 }
    }
}

/// Separatrix branch leaving the origin along `±e₊`, parameterized by unit-rate
/// time `s` normalized so that `u(s) ≈ ±e^s` as `s → -∞`.
#[derive(Clone, Debug)]
pub struct SeparatrixCurve {
    pub system: HamiltonianSystem,
    pub branch: Branch,
    pub delta: f64,
    pub s: Vec<f64>,
    pub points: Vec<Point>,
    pub start: NormalChart,
    pub end: NormalChart,
}

impl SeparatrixCurve {
    /// Raw time per unit of `s`.
    pub fn time_scale(&self) -> f64 {
        1.0 / self.start.rate
    }

    /// Point at parameter `s`, integrated from the nearest stored sample.
    pub fn point_at(&self, s: f64) -> Result<Point> {
        let ds = self.s[1] - self.s[0];
        let k = (((s - self.s[0]) / ds).round().max(0.0) as usize).min(self.s.len() - 1);
        let rem = (s - self.s[k]) * self.time_scale();
        if rem == 0.0 {
            return Ok(self.points[k]);
        }
        let n = ((rem.abs() / 1e-3).ceil() as usize).max(1);
        let (traj, _) = run(&self.system, self.points[k], rem, rem.abs() / n as f64, false, false)?;
        Ok(traj.end())
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.points.iter().map(|&z| self.system.h(z).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,x,xi")?;
        for (s, z) in self.s.iter().zip(&self.points) {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", s, z.0, z.1)?;
        }
        Ok(())
    }
}

/// Trace the separatrix leaving the hyperbolic fixed point at the origin.
pub fn separatrix(sys: &HamiltonianSystem, branch: Branch, opts: SeparatrixOptions) -> Result<SeparatrixCurve> {
    let origin = sys.fixed_point_near((0.0, 0.0))?;
    let start = NormalChart::at(sys, origin)?;
    let sg = branch.sign();
    let seed = start.from_chart(sg * opts.delta, 0.0);
    let s0 = opts.delta.ln();
    let lam = start.rate;
    let span = (opts.s_max - s0) / lam;
    let (traj, _) = run(sys, seed, span, opts.ds / lam, false, false)?;
    let s: Vec<f64> = traj.times.iter().map(|t| s0 + lam * t).collect();
    let last = traj.end();
    let end_point = sys.fixed_point_near(last)?;
    let end = NormalChart::at(sys, end_point)?;
    Ok(SeparatrixCurve { system: sys.clone(), branch, delta: opts.delta, s, points: traj.points, start, end })
}

#[derive(Clone, Debug, PartialEq)]
pub struct T0Estimate {
    pub t0: f64,
    /// Signed limit of `u(-s) v(s) e^{2s}`.
    pub limit: f64,
    pub ladder: Vec<(f64, f64)>,
    pub residual: f64,
}

/// `t0 = log lim_{s→∞} |u(-s) v(s) e^{2s}|` with `u` read in the start chart and
/// `v` in the end chart, evaluated on `s = s_lo..=s_hi` and extrapolated.
pub fn compute_t0(curve: &SeparatrixCurve, s_lo: i32, s_hi: i32) -> Result<T0Estimate> {
    let mut ladder = Vec::new();
    for k in s_lo..=s_hi {
        let s = k as f64;
        let u = curve.start.to_chart(curve.point_at(-s)?).0;
        let v = curve.end.to_chart(curve.point_at(s)?).1;
        ladder.push((s, u * v * (2.0 * s).exp()));
    }
    let g: Vec<f64> = ladder.iter().map(|p| p.1).collect();
    let aitken = |a: f64, b: f64, c: f64| {
        let den = (c - b) - (b - a);
        if den.abs() < 1e-300 || ((c - b) / (b - a)).abs() > 0.9 {
            c
        } else {
            c - (c - b).powi(2) / den
        }
    };
    let n = g.len();
    if n < 4 {
        return Err(Error::InvalidArgument("t0 ladder needs at least four rungs".into()));
    }
    let e1 = aitken(g[n - 3], g[n - 2], g[n - 1]);
    let e0 = aitken(g[n - 4], g[n - 3], g[n - 2]);
    let residual = ((e1 - e0) / e1).abs();
    if !(residual < 1e-4) || e1 == 0.0 {
        return Err(Error::NoConvergence(format!("t0 ladder residual {residual:e}")));
    }
    Ok(T0Estimate { t0: e1.abs().ln(), limit: e1, ladder, residual })
}

/// `t0` with the default ladder `s = 4..=12`.
pub fn t0_default(sys: &HamiltonianSystem, branch: Branch) -> Result<T0Estimate> {
    let curve = separatrix(sys, branch, SeparatrixOptions::default())?;
    compute_t0(&curve, 4, 12)
}

/// `∫ ξ dx` along the stored curve (trapezoid).
pub fn curve_action(curve: &SeparatrixCurve) -> f64 {
    curve.points.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum()
}
