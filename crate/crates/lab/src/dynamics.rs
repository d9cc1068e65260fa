use crate::experiments::{rows, stage, Run};
use crate::plot::{Plot, Series};
use anyhow::{Context, Result};
use rayon::prelude::*;
use semiclassical::classical::{t0_default, Branch, HamiltonianSystem};
use semiclassical::fit::loglog_fit;
use semiclassical::metaplectic::{approximant_error, ReferenceOptions};
use semiclassical::phase_space::{CoherentStateSpec, SymbolFunction};
use semiclassical::reconstruction::*;
use semiclassical::weyl::{observable_expectation, ObservableSymbol};

fn system(r: &Run) -> Result<HamiltonianSystem> {
    HamiltonianSystem::builtin(&r.cfg.system).with_context(|| format!("stage setup: unknown system {}", r.cfg.system))
}

/// Entry of `list` closest to `target` on a log scale.
fn closest(list: &[f64], target: f64) -> usize {
    let d = |h: f64| (h / target).ln().abs();
    (0..list.len()).min_by(|&a, &b| d(list[a]).partial_cmp(&d(list[b])).unwrap()).unwrap_or(0)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> semiclassical::Result<()>) -> Result<Vec<u8>> {
    let mut v = Vec::new();
    f(&mut v)?;
    Ok(v)
}

pub fn ehrenfest(r: &mut Run) -> Result<()> {
    let sys = system(r)?;
    let hbars = r.cfg.hbar_list.clone();
    let t = r.cfg.t;
    let q0 = 0.5f64.sqrt();
    let opts = ReferenceOptions { x_min: r.cfg.x_min, x_max: r.cfg.x_max, dt: r.cfg.dt, refine: 1 };
    let errors: Vec<f64> = hbars
        .par_iter()
        .map(|&h| approximant_error(&sys, &CoherentStateSpec::gaussian(q0, 0.0, h), t, &opts, false).map(|row| row.error))
        .collect::<semiclassical::Result<_>>()
        .context("stage approximant error")?;
    let control_opts = ReferenceOptions { x_min: -3.0, x_max: 3.0, dt: 2.5e-4, refine: 1 };
    let harmonic = HamiltonianSystem::harmonic();
    let control: Vec<f64> = hbars
        .par_iter()
        .map(|&h| approximant_error(&harmonic, &CoherentStateSpec::gaussian(q0, 0.0, h), t, &control_opts, false).map(|row| row.error))
        .collect::<semiclassical::Result<_>>()
        .context("stage harmonic control")?;
    let table: Vec<(f64, f64, f64)> = hbars.iter().zip(&errors).zip(&control).map(|((&h, &e), &c)| (h, e, c)).collect();
    r.out.csv("errors.csv", "hbar,error,harmonic_error", rows(&table, |t| format!("{:.6e},{:.12e},{:.12e}", t.0, t.1, t.2)))?;
    let fit = loglog_fit(&hbars, &errors);
    r.metric("slope", fit.slope);
    r.check(5, "slope of log E against log ħ in [0.4, 0.6]", (0.4..=0.6).contains(&fit.slope), format!("{:.4}", fit.slope));
    for t in &table {
        r.check(5, &format!("harmonic control at ħ = {:e}", t.0), t.2 < 1e-6, format!("{:.3e}", t.2));
    }
    r.out.svg(
        "errors.svg",
        &Plot::new(&format!("Approximant error at t = {t}"), "ħ", "error")
            .log_x()
            .log_y()
            .with(Series::markers(&sys.name, hbars.iter().copied().zip(errors.iter().copied()).collect()))
            .with(Series::line("fit", hbars.iter().map(|&h| (h, (fit.intercept + fit.slope * h.ln()).exp())).collect()))
            .with(Series::markers("harmonic", hbars.iter().copied().zip(control.iter().map(|e| e.max(1e-16))).collect())),
    )?;
    Ok(())
}

pub fn homoclinic(r: &mut Run) -> Result<()> {
    let sys = system(r)?;
    let hbars = r.cfg.hbar_list.clone();
    let opts = RevivalOptions { dt: r.cfg.dt, x_min: r.cfg.x_min, x_max: r.cfg.x_max, ..RevivalOptions::default() };
    let spec = |h: f64| CoherentStateSpec::gaussian(0.0, 0.0, h);
    let scans: Vec<RevivalRow> = hbars.par_iter().map(|&h| revival_row(&sys, &spec(h), &opts)).collect::<semiclassical::Result<_>>().context("stage revival scan")?;
    let t0 = stage("t0", t0_default(&sys, Branch::Positive))?.t0;
    let report = stage("revival fit", RevivalReport::from_rows(scans, t0))?;
    r.out.write("revival_times.csv", &csv_bytes(|w| report.write_csv(w))?)?;
    let mut curves = Plot::new("Autocorrelation", "unit-rate time τ", "|⟨ψ⁰, ψᵗ⟩|");
    for (k, row) in report.rows.iter().enumerate() {
        r.out.write(&format!("autocorrelation_{k}.csv"), &csv_bytes(|w| row.series.write_csv(w))?)?;
        curves = curves.with(Series::line(&format!("ħ = {:e}", row.hbar), row.series.times.iter().copied().zip(row.series.autocorrelation.iter().copied()).collect()));
    }
    r.out.svg("autocorrelation.svg", &curves)?;
    let xs: Vec<f64> = report.rows.iter().map(|row| row.log_inv_hbar).collect();
    r.out.svg(
        "revival_times.svg",
        &Plot::new("Return time against log(1/ħ)", "log(1/ħ)", "τ*")
            .with(Series::markers("measured", report.rows.iter().map(|row| (row.log_inv_hbar, row.peak.time)).collect()))
            .with(Series::line("fit", xs.iter().map(|&x| (x, report.a * x + report.b)).collect()))
            .with(Series::line("log(1/ħ) - t₀", xs.iter().map(|&x| (x, x - t0)).collect())),
    )?;
    r.metric("t0", t0);
    r.metric("slope", report.a);
    r.metric("intercept", report.b);
    r.check(6, "slope of τ* against log(1/ħ) in [0.7, 1.3]", (0.7..=1.3).contains(&report.a), format!("{:.4}", report.a));
    r.check(6, "intercept within 0.5 of -t₀", report.intercept_gap() <= 0.5, format!("B = {:.4}, -t₀ = {:.4}", report.b, -t0));

    // localization alternation at ħ nearest 1e-3
    let k7 = closest(&hbars, 1e-3);
    let row = &report.rows[k7];
    let ipr_at = |tau: f64| {
        let k = row.series.times.iter().position(|&t| t >= tau).unwrap_or(row.series.times.len() - 1);
        row.series.ipr[k]
    };
    let ratio = ipr_at(row.peak.time) / ipr_at(0.5 * row.peak.time);
    r.metric("ipr_ratio_literal", ipr_at(row.log_inv_hbar) / ipr_at(0.5 * row.log_inv_hbar));
    r.metric("ipr_ratio", ratio);
    r.check(7, &format!("IPR at the return over IPR at half time, ħ = {:e}", row.hbar), ratio >= 2.0, format!("{ratio:.3} (return τ* = {:.3})", row.peak.time));

    let x2 = ObservableSymbol::position(|x| x * x);
    let t = r.cfg.t;
    let bounded: Vec<f64> = hbars
        .par_iter()
        .map(|&h| {
            let s = spec(h);
            let mut ev = Evolution::new(&sys, &s, scan_grid(&s, &opts)?, opts.dt)?;
            Ok(observable_expectation(&ev.at(t)?, &x2)?.abs())
        })
        .collect::<semiclassical::Result<_>>()
        .context("stage bounded-time expectation")?;
    let slope = loglog_fit(&hbars, &bounded).slope;
    r.out.csv("bounded_time.csv", "hbar,deviation", hbars.iter().zip(&bounded).map(|(h, d)| format!("{h:.6e},{d:.12e}")))?;
    r.metric("bounded_time_slope", slope);
    r.check(7, &format!("bounded-time |⟨x²⟩ - x²(0,0)| slope at t = {t} in [0.35, 0.65]"), (0.35..=0.65).contains(&slope), format!("{slope:.4}"));

    let h = hbars[k7];
    let s = spec(h);
    let rate = stage("saddle rate", saddle_rate(&sys, &s))?;
    let l = (1.0 / h).ln();
    let mut ev = stage("evolution", scan_grid(&s, &opts).and_then(|g| Evolution::new(&sys, &s, g, opts.dt)))?;
    let exact = stage("half-time expectation", ev.at((0.5 * l - 0.5) / rate).and_then(|psi| observable_expectation(&psi, &x2)))?;
    let pred = stage("Lagrangian measure", lagrangian_prediction(&x2, &SymbolFunction::gaussian_default(), -0.5, &sys))?;
    r.metric("half_time_exact", exact);
    r.metric("half_time_lagrangian", pred);
    r.check(7, "half-time ⟨x²⟩ against the Lagrangian measure within 0.1", (exact - pred).abs() <= 0.1, format!("{exact:.4} vs {pred:.4}"));

    let (sp, sm) = stage("branch actions", branch_actions(&sys))?;
    let p = MapParams { hbar: h, gamma: r.cfg.gamma, s_plus: sp, s_minus: sm };
    let taus: Vec<f64> = (0..=60).map(|k| l + k as f64 * 0.1).collect();
    let rec = stage("reconstruction", reconstruction_scan(&sys, &s, 1, &p, &taus, &opts))?;
    r.metric("reconstruction_fidelity", rec.peak_fidelity);
    r.metric("reconstruction_time", rec.peak_time);
    for w in rec.warnings {
        r.warn(w);
    }
    r.out.csv("localization.csv", "tau,ipr", rec.localization.iter().map(|(t, i)| format!("{t:.6},{i:.12e}")))?;
    Ok(())
}

pub fn iterate(r: &mut Run) -> Result<()> {
    let sys = system(r)?;
    let hbars = r.cfg.hbar_list.clone();
    let n = r.cfg.n;
    let gamma = r.cfg.gamma;
    let (sp, sm) = stage("branch actions", branch_actions(&sys))?;
    let a = SymbolFunction::gaussian_default();
    let params = |h: f64| MapParams { hbar: h, gamma, s_plus: sp, s_minus: sm };
    let results: Vec<(f64, semiclassical::error::Diagnosed<Iteration>)> = hbars
        .par_iter()
        .map(|&h| {
            let one = symbol_map_u(&a, &params(h))?;
            Ok(((one.norm() - a.norm()).abs(), iterate_symbol_map(&a, n, &params(h))?))
        })
        .collect::<semiclassical::Result<_>>()
        .context("stage symbol map")?;
    let mut lines = Vec::new();
    for (&h, (dev, it)) in hbars.iter().zip(&results) {
        for (k, v) in it.value.norms.iter().enumerate() {
            lines.push(format!("{h:.6e},{k},{v:.15},{dev:.12e}"));
        }
        for w in &it.warnings {
            r.warn(format!("ħ = {h:e}: {w}"));
        }
    }
    r.out.csv("norms.csv", "hbar,k,norm,single_step_deviation", lines)?;
    let devs: Vec<f64> = results.iter().map(|x| x.0).collect();
    let mut order: Vec<usize> = (0..hbars.len()).collect();
    order.sort_by(|&x, &y| hbars[y].partial_cmp(&hbars[x]).unwrap());
    let decreasing = order.windows(2).all(|w| devs[w[1]] < devs[w[0]]);
    let smallest = *order.last().unwrap();
    r.check(8, "norm deviation strictly decreasing as ħ shrinks", decreasing, format!("{:?}", order.iter().map(|&k| format!("{:.4}", devs[k])).collect::<Vec<_>>()));
    r.check(8, &format!("norm deviation below 0.05 at ħ = {:e}", hbars[smallest]), devs[smallest] < 0.05, format!("{:.4}", devs[smallest]));
    r.out.svg(
        "deviation.svg",
        &Plot::new(&format!("|‖Ua‖ - ‖a‖|, γ = {gamma}"), "ħ", "deviation")
            .log_x()
            .log_y()
            .with(Series::markers("measured", hbars.iter().copied().zip(devs.iter().copied()).collect()))
            .with(Series::line("0.5 ħ^{γ/2}", hbars.iter().map(|&h| (h, 0.5 * h.powf(gamma / 2.0))).collect())),
    )?;
    let largest = order[0];
    let sym = &results[largest].1.value.symbol;
    let pts = |s: &SymbolFunction| -> Vec<(f64, f64)> { (0..s.grid.n).map(|k| (s.grid.x(k), s.values[k].norm())).filter(|p| p.0.abs() < 6.0).collect() };
    r.out.svg("symbol.svg", &Plot::new(&format!("Symbol after {n} steps, ħ = {:e}", hbars[largest]), "y", "|a|").with(Series::line("a", pts(&a))).with(Series::line("Uⁿa", pts(sym))))?;

    // n-fold reconstruction against the exact evolution at the largest ħ
    if n >= 1 && hbars[largest] >= 1e-4 {
        let h = hbars[largest];
        let l = (1.0 / h).ln();
        let t0 = stage("t0", t0_default(&sys, Branch::Positive))?.t0;
        let (lo, hi) = (n as f64 * l - 2.0, n as f64 * (l + t0) + 3.0);
        let taus: Vec<f64> = (0..=((hi - lo) / 0.1).ceil() as usize).map(|k| lo + k as f64 * 0.1).collect();
        let opts = RevivalOptions { dt: r.cfg.dt, x_min: r.cfg.x_min, x_max: r.cfg.x_max, ..RevivalOptions::default() };
        let rec = stage("reconstruction", reconstruction_scan(&sys, &CoherentStateSpec::gaussian(0.0, 0.0, h), n, &params(h), &taus, &opts))?;
        r.metric("reconstruction_fidelity", rec.peak_fidelity);
        r.metric("reconstruction_time", rec.peak_time);
        r.out.csv("reconstruction.csv", "hbar,n,peak_time,peak_fidelity,predicted_time", [format!("{h:.6e},{n},{:.6},{:.9},{:.6}", rec.peak_time, rec.peak_fidelity, rec.predicted_time)])?;
    }
    Ok(())
}
