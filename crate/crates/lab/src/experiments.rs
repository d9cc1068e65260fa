use crate::config::{Experiment, ExperimentConfig};
use crate::output::{Check, ExperimentManifest, Outputs};
use crate::plot::{Plot, Series};
use anyhow::{Context, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use semiclassical::circle::*;
use semiclassical::fit::{linear_fit, loglog_fit};
use semiclassical::phase_space::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

/// Mutable state of one experiment run.
pub struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: Outputs,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

impl Run<'_> {
    pub fn check(&mut self, criterion: u8, name: &str, pass: bool, detail: String) {
        self.checks.push(Check::new(criterion, name, pass, detail));
    }

    pub fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    pub fn warn(&mut self, w: impl std::fmt::Display) {
        self.warnings.push(w.to_string());
    }
}

/// Attach the failing stage to a core error.
pub(crate) fn stage<T>(name: &str, r: semiclassical::Result<T>) -> Result<T> {
    r.with_context(|| format!("stage {name}"))
}

pub(crate) fn rows<T>(v: &[T], f: impl Fn(&T) -> String) -> Vec<String> {
    v.iter().map(f).collect()
}

pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentManifest> {
    let start = Instant::now();
    let out = Outputs::create(out_dir).with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let mut r = Run { cfg, out, checks: Vec::new(), warnings: Vec::new(), metrics: BTreeMap::new() };
    match cfg.experiment {
        Experiment::Revival => revival(&mut r)?,
        Experiment::Fractional => fractional(&mut r)?,
        Experiment::Airy => airy(&mut r)?,
        Experiment::Squeezed => squeezed(&mut r)?,
        Experiment::ProductMode => product_mode(&mut r)?,
        Experiment::Ehrenfest => crate::dynamics::ehrenfest(&mut r)?,
        Experiment::Homoclinic => crate::dynamics::homoclinic(&mut r)?,
        Experiment::Iterate => crate::dynamics::iterate(&mut r)?,
        Experiment::Pendulum => crate::lattice::pendulum(&mut r)?,
        Experiment::Harper => crate::lattice::harper(&mut r)?,
        Experiment::MatrixElements => crate::lattice::matrix_elements(&mut r)?,
    }
    let mut manifest = ExperimentManifest {
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: 0.0,
        checks: r.checks,
        warnings: r.warnings,
        metrics: r.metrics,
        outputs: r.out.files().to_vec(),
    };
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), text).context("cannot write manifest")?;
    Ok(manifest)
}

fn revival(r: &mut Run) -> Result<()> {
    let hbar = r.cfg.hbar;
    let psi0 = stage("initial state", make_coherent_state(&CoherentStateSpec::gaussian(1.0, 0.0, hbar), Grid::circle(r.cfg.grid_n)))?;
    let law = DispersionLaw::quadratic();
    let per = 64;
    let mut series = Vec::new();
    for m in 0..=3 * per {
        let k = m as f64 / per as f64;
        let psi = stage("propagate", propagate_dispersion(&psi0, &law, Time::Revivals(k)))?;
        series.push((k, stage("fidelity", fidelity(&psi0, &psi))?));
    }
    r.out.csv("fidelity_series.csv", "t,revivals,fidelity", rows(&series, |(k, f)| format!("{:.12e},{k:.6},{f:.15}", k * 2.0 * PI / hbar)))?;
    r.out.svg(
        "fidelity.svg",
        &Plot::new("Return fidelity, quadratic dispersion", "t ħ / 2π", "|⟨ψ⁰, ψᵗ⟩|").with(Series::line("fidelity", series.clone())),
    )?;
    for k in 1..=3 {
        let f = series[k * per].1;
        r.check(1, &format!("fidelity at t = {k}·2π/ħ"), f >= 1.0 - 1e-9, format!("{f:.15}"));
    }
    Ok(())
}

fn fractional(r: &mut Run) -> Result<()> {
    let (p, q, hbar) = (r.cfg.p, r.cfg.q, r.cfg.hbar);
    let psi0 = stage("initial state", make_coherent_state(&CoherentStateSpec::gaussian(0.0, 0.0, hbar), Grid::circle(r.cfg.grid_n)))?;
    let pred = stage("gauss sums", fractional_revival(p, q))?;
    let psi = stage("propagate", propagate_dispersion(&psi0, &DispersionLaw::quadratic(), Time::Revivals(pred.revivals)))?;
    let sup = pred.superpose(&psi0);
    let dist = (psi.values.iter().zip(&sup.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * psi.grid.weight()).sqrt();
    let sites: Vec<(f64, C64)> = pred.sites.iter().copied().zip(pred.weights.iter().copied()).collect();
    r.out.csv(
        "sites.csv",
        "j,site,weight_re,weight_im,weight_abs",
        sites.iter().enumerate().map(|(j, (x, w))| format!("{j},{x:.15},{:.15},{:.15},{:.15}", w.re, w.im, w.norm())),
    )?;
    let n = psi.grid.n;
    let profile: Vec<(f64, f64, f64)> = (0..n).map(|k| (psi.grid.x(k), psi.values[k].norm_sqr(), sup.values[k].norm_sqr())).collect();
    r.out.csv("profile.csv", "x,density,predicted_density", rows(&profile, |(x, a, b)| format!("{x:.12},{a:.12e},{b:.12e}")))?;
    r.out.svg(
        "profile.svg",
        &Plot::new(&format!("Fractional revival p/q = {p}/{q}"), "x", "|ψ|²")
            .with(Series::line("propagated", profile.iter().map(|v| (v.0, v.1)).collect()))
            .with(Series::line("Gauss-sum superposition", profile.iter().step_by(8).map(|v| (v.0, v.2)).collect())),
    )?;
    r.metric("l2_distance", dist);
    r.check(2, &format!("L² distance at p/q = {p}/{q}"), dist <= 1e-6, format!("{dist:.3e}"));
    let mass: f64 = pred.weights.iter().map(|w| w.norm_sqr()).sum();
    r.check(2, "Gauss-sum weights are unitary", (mass - 1.0).abs() < 1e-12, format!("Σ|w|² = {mass:.15}"));
    Ok(())
}

/// Grid size resolving a packet of width `√ħ` on the circle.
pub fn circle_n(hbar: f64) -> usize {
    (128.0 / hbar.sqrt()).log2().ceil().exp2() as usize
}

/// State at the `s`-th revival time under `ξ² + cξ³ + dξ⁴` from a (squeezed) packet at the origin.
pub fn revived(hbar: f64, c: f64, d: f64, eps: f64, s: u32) -> semiclassical::Result<WaveFunction> {
    let spec = CoherentStateSpec::gaussian(0.0, 0.0, hbar).squeezed(eps);
    let psi0 = make_coherent_state(&spec, Grid::circle(circle_n(hbar)))?;
    propagate_dispersion(&psi0, &DispersionLaw::cubic_quartic(c, d), Time::Revivals(s as f64))
}

fn peak_abs(psi: &WaveFunction) -> f64 {
    psi.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn airy(r: &mut Run) -> Result<()> {
    let (c, d, s) = (r.cfg.c, r.cfg.d, r.cfg.s);
    let hbars = r.cfg.hbar_list.clone();
    let states: Vec<(WaveFunction, WaveFunction)> = hbars
        .par_iter()
        .map(|&h| Ok((revived(h, c, d, 0.0, s)?, revived(h, 0.0, 0.0, 0.0, s)?)))
        .collect::<semiclassical::Result<_>>()
        .context("stage propagate")?;
    let table: Vec<(f64, f64, f64, f64)> = hbars.iter().zip(&states).map(|(&h, (a, b))| (h, a.ipr(), b.ipr(), peak_abs(a))).collect();
    r.out.csv("scaling.csv", "hbar,ipr,ipr_free,peak", rows(&table, |(h, i, i0, pk)| format!("{h:.6e},{i:.12e},{i0:.12e},{pk:.12e}")))?;
    let (first, last) = (&table[0], &table[table.len() - 1]);
    let ratio = last.1 / first.1;
    let ratio_free = last.2 / first.2;
    let peaks: Vec<f64> = table.iter().map(|t| t.3).collect();
    let exponent = loglog_fit(&hbars, &peaks).slope;
    r.metric("ipr_ratio", ratio);
    r.metric("ipr_ratio_free", ratio_free);
    r.metric("peak_exponent", exponent);
    r.check(3, &format!("IPR ratio ħ = {:e} / {:e} with c = {c}", last.0, first.0), ratio <= 1.5, format!("{ratio:.4}"));
    r.check(3, "IPR ratio with c = 0", ratio_free >= 2.5, format!("{ratio_free:.4}"));
    r.check(3, "origin peak exponent in [-0.12, -0.05]", (-0.12..=-0.05).contains(&exponent), format!("{exponent:.4} (target -1/12)"));

    // profile at the smallest ħ against both asymptotic regimes
    let (k_min, _) = hbars.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &h)| if h < acc.1 { (k, h) } else { acc });
    let h = hbars[k_min];
    let psi = &states[k_min].0;
    let w = airy_width(s, c, h);
    let mut lines = Vec::new();
    let (mut num, mut origin, mut bulk) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..psi.grid.n {
        let x = psi.grid.x(k);
        let xs = if x > PI { x - 2.0 * PI } else { x };
        let o = if xs.abs() < 6.0 * w {
            Some((stage("origin asymptotics", airy_profile(xs, s, c, d, h, AiryRegime::Origin))? + airy_images(xs, s, c, d, h)).norm())
        } else {
            None
        };
        let b = if (PI / 2.0..=1.5 * PI).contains(&x) { Some(stage("bulk asymptotics", airy_profile(x, s, c, d, h, AiryRegime::Bulk))?.norm()) } else { None };
        let a = psi.values[k].norm();
        let show = |v: Option<f64>| v.map(|v| format!("{v:.12e}")).unwrap_or_default();
        lines.push(format!("{xs:.12},{a:.12e},{},{}", show(o), show(b)));
        if xs.abs() < 12.0 * w {
            num.push((xs, a));
        }
        if let Some(o) = o {
            origin.push((xs, o));
        }
        if let Some(b) = b {
            bulk.push((x, b));
        }
    }
    r.out.csv("profile.csv", "x,abs_psi,origin_model,bulk_model", lines)?;
    num.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    origin.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    r.out.svg(
        "origin_profile.svg",
        &Plot::new(&format!("Revival profile near the origin, ħ = {h:e}"), "x", "|ψ|").with(Series::line("propagated", num)).with(Series::markers("Airy", origin)),
    )?;
    r.out.svg(
        "peak_scaling.svg",
        &Plot::new("Origin peak height", "ħ", "max |ψ|")
            .log_x()
            .log_y()
            .with(Series::markers("measured", hbars.iter().copied().zip(peaks.iter().copied()).collect()))
            .with(Series::line("ħ^{-1/12}", hbars.iter().map(|&x| (x, peaks[0] * (x / hbars[0]).powf(-1.0 / 12.0))).collect())),
    )?;
    let bulk_abs: Vec<(f64, f64)> = (0..psi.grid.n).filter(|&k| (PI / 2.0..=1.5 * PI).contains(&psi.grid.x(k))).map(|k| (psi.grid.x(k), psi.values[k].norm())).collect();
    r.out.svg("bulk_profile.svg", &Plot::new("Bulk profile", "x", "|ψ|").log_y().with(Series::line("propagated", bulk_abs)).with(Series::line("bulk asymptotics", bulk)))?;
    Ok(())
}

/// Exponential envelope `A e^{-λx}` of `|ψ|` on `(0.1, 1)`: fitted through the local maxima of
/// `|ψ| x^{1/4}`. Returns `(λ, A)`.
pub fn envelope_fit(psi: &WaveFunction) -> (f64, f64) {
    let a: Vec<f64> = psi.values.iter().map(|v| v.norm()).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 1..a.len() - 1 {
        let x = psi.grid.x(k);
        if x > 0.1 && x < 1.0 && a[k] > a[k - 1] && a[k] >= a[k + 1] {
            xs.push(x);
            ys.push((a[k] * x.powf(0.25)).ln());
        }
    }
    let f = linear_fit(&xs, &ys);
    (-f.slope, f.intercept.exp())
}

fn squeezed(r: &mut Run) -> Result<()> {
    let (c, d, s, eps) = (r.cfg.c, r.cfg.d, r.cfg.s, r.cfg.eps);
    let hbars = r.cfg.hbar_list.clone();
    let states: Vec<WaveFunction> = hbars.par_iter().map(|&h| revived(h, c, d, eps, s)).collect::<semiclassical::Result<_>>().context("stage propagate")?;
    let mut table = Vec::new();
    for (&h, psi) in hbars.iter().zip(&states) {
        let (rate, amp) = envelope_fit(psi);
        let literal = 1.0 / (s as f64 * c.abs() * h.powf(eps));
        let consistent = 1.0 / squeezed_length(s, c, eps, h);
        table.push((h, rate, amp, literal, consistent));
    }
    r.out.csv(
        "envelope.csv",
        "hbar,rate,amplitude,literal_rate,consistent_rate",
        rows(&table, |t| format!("{:.6e},{:.12e},{:.12e},{:.12e},{:.12e}", t.0, t.1, t.2, t.3, t.4)),
    )?;
    for t in &table {
        let rel = (t.1 / t.3 - 1.0).abs();
        r.check(4, &format!("decay rate vs 1/(scħ^ε) at ħ = {:e}", t.0), rel <= 0.1, format!("fit {:.4}, predicted {:.4}, relative error {rel:.3}", t.1, t.3));
        r.metric(&format!("consistent_rate_error_{:e}", t.0), (t.1 / t.4 - 1.0).abs());
    }
    let amps: Vec<f64> = table.iter().map(|t| t.2).collect();
    let exponent = loglog_fit(&hbars, &amps).slope;
    r.metric("amplitude_exponent", exponent);
    r.metric("amplitude_exponent_normalized_target", -eps / 4.0);
    r.check(4, "amplitude exponent -ε/2 within 0.05", (exponent + eps / 2.0).abs() <= 0.05, format!("{exponent:.4} vs {:.4}", -eps / 2.0));

    let mut plot = Plot::new("Squeezed revival envelope", "x", "|ψ|").log_y();
    for (t, psi) in table.iter().zip(&states) {
        let pts: Vec<(f64, f64)> = (0..psi.grid.n).map(|k| (psi.grid.x(k), psi.values[k].norm())).filter(|p| p.0 > 0.05 && p.0 < 1.2).collect();
        plot = plot.with(Series::line(&format!("ħ = {:e}", t.0), pts));
        plot = plot.with(Series::line(&format!("fit ħ = {:e}", t.0), (1..=12).map(|k| k as f64 / 10.0).map(|x| (x, t.2 * (-t.1 * x).exp() * x.powf(-0.25))).collect()));
    }
    r.out.svg("envelope.svg", &plot)?;
    Ok(())
}

fn level_packet(m: usize, j_levels: usize, j: usize, hbar: f64) -> ProductCoeffs {
    let mut g = ProductCoeffs::zeros(m, j_levels);
    for k in 0..m {
        let n = semiclassical::fft::freq_index(k, m) as f64;
        g.set(k, j, C64::new((-0.5 * hbar * n * n).exp(), 0.0));
    }
    g
}

fn product_mode(r: &mut Run) -> Result<()> {
    let hbar = r.cfg.hbar;
    let hp = ProductHamiltonian { a: r.cfg.a, b: r.cfg.b, c: r.cfg.c, d: r.cfg.d };
    if hp.b == 0.0 {
        anyhow::bail!("stage setup: b must be nonzero");
    }
    let m = r.cfg.grid_n;
    let levels = r.cfg.n.max(1);
    let s = r.cfg.s;
    let dx = 2.0 * PI / m as f64;
    let mut table = Vec::new();
    let mut plot = Plot::new("Level profiles at the revival time", "x", "|ψ_j|");
    for j in 0..levels {
        // one empty level on top keeps the truncation monitor quiet
        let g = level_packet(m, levels + 1, j, hbar);
        let out = stage("propagate", product_mode_propagate(&g, hp, Time::Revivals(s as f64 / hp.b), hbar))?;
        for w in &out.warnings {
            r.warn(w);
        }
        let prof = out.value.level_profile(j);
        let k = (0..m).max_by(|&a, &b| prof[a].norm().partial_cmp(&prof[b].norm()).unwrap()).unwrap_or(0);
        let expect = product_mode_shift(hp, s, j);
        let err = ((k as f64 * dx - expect + PI).rem_euclid(2.0 * PI) - PI).abs();
        table.push((j, expect, k as f64 * dx, err));
        let peak = prof[k].norm();
        plot = plot.with(Series::line(&format!("j = {j}"), (0..m).map(|i| (i as f64 * dx, prof[i].norm() / peak)).collect()));
    }
    r.out.csv("levels.csv", "j,expected_shift,measured_shift,error", rows(&table, |t| format!("{},{:.12},{:.12},{:.3e}", t.0, t.1, t.2, t.3)))?;
    r.out.svg("levels.svg", &plot)?;
    for t in &table {
        r.check(0, &format!("level {} shift", t.0), t.3 <= dx, format!("measured {:.5}, expected {:.5}", t.2, t.1));
    }
    Ok(())
}
