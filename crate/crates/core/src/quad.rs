//! Quadrature rules: Gauss-Legendre panels, adaptive Gauss-Kronrod, Filon panels.

use num_complex::Complex64 as C64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    ((rk * h), ((rk - rg) * h).norm())
}

/// Adaptive Gauss-Kronrod (7/15) integration of a complex integrand.
pub fn adaptive_gk<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, tol: f64, max_intervals: usize) -> Option<C64> {
    let mut stack = vec![(a, b)];
    let mut total = C64::new(0.0, 0.0);
    let mut count = 0usize;
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi)) = stack.pop() {
        count += 1;
        if count > max_intervals {
            return None;
        }
        let (val, err) = gk15(&f, lo, hi);
        if err <= tol * (hi - lo).abs() / width || (hi - lo).abs() < 1e-12 * width {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Some(total)
}

/// Composite Filon rule for `∫ f(μ) e^{iωμ} dμ` with piecewise-linear `f`.
/// `mu` must be increasing; `f` holds samples at `mu`.
pub fn filon_linear(mu: &[f64], f: &[C64], omega: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..mu.len() - 1 {
        let (a, b) = (mu[k], mu[k + 1]);
        let h = b - a;
        let th = omega * h;
        let ea = C64::from_polar(1.0, omega * a);
        // ∫_0^h (f0 (1 - s/h) + f1 s/h) e^{iωs} ds
        let (w0, w1) = if th.abs() < 1e-3 {
            let t2 = th * th;
            let w0 = C64::new(0.5 - t2 / 24.0, th / 6.0 - t2 * th / 120.0) * h;
            let w1 = C64::new(0.5 - t2 / 8.0, th / 3.0 - t2 * th / 30.0) * h;
            (w0, w1)
        } else {
            let i = C64::i();
            let e = C64::from_polar(1.0, th);
            let w1 = h * (e / (i * th) + (e - 1.0) / (th * th));
            let w0 = h * ((e - 1.0) / (i * th)) - w1;
            (w0, w1)
        };
        acc += ea * (f[k] * w0 + f[k + 1] * w1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = adaptive_gk(|x| C64::from_polar(1.0, 30.0 * x), 0.0, 1.0, 1e-12, 10_000).unwrap();
        let exact = (C64::from_polar(1.0, 30.0) - 1.0) / C64::new(0.0, 30.0);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn filon_exact_for_linear_amplitude() {
        let mu: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let f: Vec<C64> = mu.iter().map(|m| C64::new(1.0 + 2.0 * m, 0.0)).collect();
        let w = 40.0;
        let got = filon_linear(&mu, &f, w);
        let exact = adaptive_gk(|m| C64::from_polar(1.0 + 2.0 * m, w * m), 0.0, 3.0, 1e-13, 100_000).unwrap();
        assert!((got - exact).norm() < 1e-10);
        let small = filon_linear(&mu, &f, 1e-5);
        let exact_small = adaptive_gk(|m| C64::from_polar(1.0 + 2.0 * m, 1e-5 * m), 0.0, 3.0, 1e-13, 100_000).unwrap();
        assert!((small - exact_small).norm() < 1e-9);
    }
}
