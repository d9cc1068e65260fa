//! Airy function and normalized Hermite functions.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = 0.258_819_403_792_806_8;

fn airy_maclaurin(z: f64) -> f64 {
    let z3 = z * z * z;
    let (mut f, mut g) = (1.0, z);
    let (mut tf, mut tg) = (1.0, z);
    let mut k = 0.0;
    loop {
        tf *= z3 / ((3.0 * k + 2.0) * (3.0 * k + 3.0));
        tg *= z3 / ((3.0 * k + 3.0) * (3.0 * k + 4.0));
        f += tf;
        g += tg;
        k += 1.0;
        if tf.abs() < 1e-18 * f.abs().max(1.0) && tg.abs() < 1e-18 * g.abs().max(1.0) {
            break;
        }
        if k > 200.0 {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

fn u_coeffs(n: usize) -> Vec<f64> {
    let mut u = vec![1.0];
    for k in 1..n {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    u
}

/// Airy function `Ai(z)` for real `z`.
pub fn airy_ai(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if (-6.0..=5.0).contains(&z) {
        return airy_maclaurin(z);
    }
    let u = u_coeffs(40);
    if z > 0.0 {
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let mut s = 0.0;
        let mut last = f64::INFINITY;
        let mut term = 1.0;
        for (k, uk) in u.iter().enumerate() {
            term = uk / zeta.powi(k as i32);
            if term > last {
                break;
            }
            s += if k % 2 == 0 { term } else { -term };
            last = term;
            if term < 1e-17 {
                break;
            }
        }
        let _ = term;
        (-zeta).exp() / (2.0 * PI.sqrt() * z.powf(0.25)) * s
    } else {
        let x = -z;
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let (mut p, mut q) = (0.0, 0.0);
        let mut last = f64::INFINITY;
        for (k, uk) in u.iter().enumerate() {
            let term = uk / zeta.powi(k as i32);
            if term > last {
                break;
            }
            last = term;
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * term;
            } else {
                q += sign * term;
            }
            if term < 1e-17 {
                break;
            }
        }
        let ph = zeta - PI / 4.0;
        (ph.cos() * p + ph.sin() * q) / (PI.sqrt() * x.powf(0.25))
    }
}

/// Leading oscillatory form `π^{-1/2} z^{-1/4} sin(2/3 z^{3/2} + π/4)` of `Ai(-z)`, `z > 0`.
pub fn airy_ai_neg_leading(z: f64) -> f64 {
    (2.0 / 3.0 * z.powf(1.5) + PI / 4.0).sin() / (PI.sqrt() * z.powf(0.25))
}

pub const HERMITE_MAX_ORDER: usize = 200;

/// Normalized Hermite function `H_j(η)` (unit L² norm on the line).
pub fn hermite_function(j: usize, eta: f64) -> Result<f64> {
    if j > HERMITE_MAX_ORDER {
        return Err(Error::OverflowGuard(format!("Hermite order {j} > {HERMITE_MAX_ORDER}")));
    }
    Ok(hermite_all(j, eta)[j])
}

/// `[H_0(η), …, H_jmax(η)]` via the stable three-term recurrence.
pub fn hermite_all(jmax: usize, eta: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(jmax + 1);
    let h0 = PI.powf(-0.25) * (-0.5 * eta * eta).exp();
    h.push(h0);
    if jmax == 0 {
        return h;
    }
    h.push(2f64.sqrt() * eta * h0);
    for j in 1..jmax {
        let jf = j as f64;
        let next = (2.0 / (jf + 1.0)).sqrt() * eta * h[j] - (jf / (jf + 1.0)).sqrt() * h[j - 1];
        h.push(next);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn airy_ode(x_end: f64) -> f64 {
        // Ai'' = x Ai integrated from the origin with classical RK4.
        let n = 200_000;
        let h = x_end / n as f64;
        let (mut x, mut y, mut yp) = (0.0f64, AI0, -AIP0);
        for _ in 0..n {
            let f = |x: f64, y: f64, yp: f64| (yp, x * y);
            let (k1a, k1b) = f(x, y, yp);
            let (k2a, k2b) = f(x + h / 2.0, y + h / 2.0 * k1a, yp + h / 2.0 * k1b);
            let (k3a, k3b) = f(x + h / 2.0, y + h / 2.0 * k2a, yp + h / 2.0 * k2b);
            let (k4a, k4b) = f(x + h, y + h * k3a, yp + h * k3b);
            y += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            yp += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
            x += h;
        }
        y
    }

    #[test]
    fn airy_matches_ode_on_negative_axis() {
        for &x in &[-1.0, -3.5, -6.0, -8.0, -12.0] {
            let a = airy_ai(x);
            let b = airy_ode(x);
            assert!((a - b).abs() < 1e-8, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn airy_matches_ode_on_positive_axis() {
        for &x in &[0.5, 2.0, 4.0] {
            let a = airy_ai(x);
            let b = airy_ode(x);
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs().recip().min(1e4)), "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn airy_branches_are_continuous() {
        for &z in &[-6.0f64, 5.0] {
            let l = airy_ai(z - 1e-9);
            let r = airy_ai(z + 1e-9);
            assert!((l - r).abs() < 1e-7 * l.abs(), "z={z}: {l} {r}");
        }
    }

    #[test]
    fn airy_first_zero() {
        assert!(airy_ai(-2.338_107_410_459_767).abs() < 1e-12);
    }

    #[test]
    fn hermite_orthonormal() {
        let n = 4000;
        let (a, b) = (-20.0, 20.0);
        let dx = (b - a) / n as f64;
        let mut g = [[0.0; 6]; 6];
        for k in 0..n {
            let x = a + k as f64 * dx;
            let h = hermite_all(5, x);
            for i in 0..6 {
                for j in 0..6 {
                    g[i][j] += h[i] * h[j] * dx;
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermite_order_guard() {
        assert!(matches!(hermite_function(201, 0.0), Err(Error::OverflowGuard(_))));
        assert!(hermite_function(200, 1.0).is_ok());
    }
}
