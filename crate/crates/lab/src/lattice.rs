use crate::experiments::{rows, stage, Run};
use crate::plot::{Plot, Series};
use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semiclassical::phase_space::SymbolFunction;
use semiclassical::reconstruction::*;
use std::f64::consts::PI;

fn model(name: &str) -> LatticeModel {
    if name == "pendulum" {
        LatticeModel::Pendulum
    } else {
        LatticeModel::Harper
    }
}

/// Walk counts of length `k`: all walks and walks without two equal consecutive steps.
pub fn count_formula(m: LatticeModel, k: usize) -> (u64, u64) {
    let s = m.steps().len() as u64;
    let all = s.pow(k as u32);
    let no_runs = if k == 0 { 1 } else { s * (s - 1).pow(k as u32 - 1) };
    (all, no_runs)
}

fn counts(r: &mut Run, m: LatticeModel, n: usize, file: &str) -> Result<()> {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 0..=n {
        let all = stage("enumerate", enumerate_paths_with(m, k, false))?.len() as u64;
        let no_runs = stage("enumerate", enumerate_paths_with(m, k, true))?.len() as u64;
        let (fa, fn_) = count_formula(m, k);
        ok &= all == fa && no_runs == fn_;
        lines.push(format!("{k},{all},{no_runs},{fa},{fn_}"));
    }
    r.out.csv(file, "n,walks,walks_without_straight_runs,formula,formula_without_straight_runs", lines)?;
    r.check(0, &format!("{m:?} walk counts up to n = {n}"), ok, format!("see {file}"));
    Ok(())
}

/// Path-sum elements `⟨a, Σ e^{iS/ħ} V_Γ b⟩` at every reachable endpoint, plus one unreachable endpoint.
fn element_table(r: &mut Run, m: LatticeModel, file: &str, criterion: u8) -> Result<()> {
    let (n, hbar, gamma, nsr) = (r.cfg.n, r.cfg.hbar, r.cfg.gamma, r.cfg.no_straight_runs);
    let a = SymbolFunction::gaussian_default();
    let paths = stage("enumerate", enumerate_paths_with(m, n, nsr))?;
    let mut ends: Vec<(i64, i64)> = paths.iter().map(|p| p.endpoint()).collect();
    ends.sort();
    ends.dedup();
    let sums: Vec<PathSum> = ends
        .par_iter()
        .map(|&e| path_sum_element(m, &a, &a, e, n, hbar, gamma, nsr))
        .collect::<semiclassical::Result<_>>()
        .context("stage path sums")?;
    r.out.csv(
        file,
        "i,j,terms,re,im,abs",
        ends.iter().zip(&sums).map(|((i, j), s)| format!("{i},{j},{},{:.15e},{:.15e},{:.15e}", s.terms, s.value.re, s.value.im, s.value.norm())),
    )?;
    let total: usize = sums.iter().map(|s| s.terms).sum();
    r.check(0, "path-sum terms cover every walk", total == paths.len(), format!("{total} of {}", paths.len()));
    let far = (n as i64 + 1, 0);
    let none = stage("path sums", path_sum_element(m, &a, &a, far, n, hbar, gamma, nsr))?;
    r.check(criterion, &format!("path-sum element at unreachable endpoint {far:?} is exactly zero"), none.value.re == 0.0 && none.value.im == 0.0 && none.terms == 0, format!("{}", none.value));
    Ok(())
}

pub fn pendulum(r: &mut Run) -> Result<()> {
    let m = LatticeModel::Pendulum;
    let n = r.cfg.n;
    let paths = stage("enumerate", enumerate_paths_with(m, n, r.cfg.no_straight_runs))?;
    let lines: Vec<String> = paths.iter().map(|p| format!("{p} {:?} {:.9}", p.endpoint(), path_action(p))).collect();
    let mut text = lines.join("\n");
    text.push('\n');
    r.out.write("paths.txt", text.as_bytes())?;
    let arc = pendulum_arc_action();
    r.metric("arc_action", arc);
    r.check(0, "arc action ∫ 2 sin(x/2) dx = 8", (arc - 8.0).abs() < 1e-5, format!("{arc:.9}"));
    counts(r, m, n, "counts.csv")?;
    element_table(r, m, "matrix_elements.csv", 0)?;
    let mut plot = Plot::new(&format!("Pendulum walks of length {n}"), "i", "j");
    for p in paths.iter().take(6) {
        plot = plot.with(Series::line(&p.to_string(), p.vertices().iter().map(|&(i, j)| (i as f64, j as f64)).collect()));
    }
    r.out.svg("paths.svg", &plot)?;
    Ok(())
}

/// Uniform probe points on the torus at least `3√ħ` from either saddle.
pub fn harper_probes(count: usize, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let hbar = 2.0 * PI / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        if distance_to_saddles(z) >= 3.0 * hbar.sqrt() {
            out.push(z);
        }
    }
    out
}

pub fn harper(r: &mut Run) -> Result<()> {
    let n = r.cfg.big_n;
    let probes = harper_probes(r.cfg.probes, n, r.cfg.seed);
    let report = stage("torus overlaps", harper_lattice_overlaps(n, &probes))?;
    let kind = |rows: &[OverlapRow], k: &'static str| rows.iter().map(move |o| format!("{k},{},{:.15},{:.15},{:.15e}", o.label, o.q, o.p, o.overlap)).collect::<Vec<_>>();
    let mut lines = kind(&report.lattice, "lattice");
    lines.extend(kind(&report.probes, "probe"));
    r.out.csv("overlaps.csv", "kind,label,q,p,overlap", lines)?;
    let max_probe = report.probes.iter().map(|o| o.overlap).fold(0.0, f64::max);
    r.metric("ratio", report.ratio());
    r.metric("time", report.time);
    for o in &report.lattice {
        r.check(9, &format!("lattice endpoint {} over the largest probe ≥ 3", o.label), o.overlap >= 3.0 * max_probe, format!("{:.3e} vs {max_probe:.3e}", o.overlap));
    }
    let bars: Vec<(f64, f64)> = report.lattice.iter().chain(&report.probes).enumerate().map(|(k, o)| (k as f64, o.overlap.max(1e-300))).collect();
    r.out.svg("overlaps.svg", &Plot::new(&format!("Overlaps after t = log(1/ħ), N = {n}"), "point (lattice first)", "|overlap|").log_y().with(Series::markers("overlap", bars)))?;
    counts(r, LatticeModel::Harper, r.cfg.n, "counts.csv")?;
    let a = SymbolFunction::gaussian_default();
    let none = stage("path sums", path_sum_element(LatticeModel::Harper, &a, &a, (1, 1), 1, report.hbar, r.cfg.gamma, false))?;
    r.check(9, "path-sum element at unreachable endpoint (1, 1) is exactly zero", none.value.re == 0.0 && none.value.im == 0.0, format!("{}", none.value));
    r.out.csv("steps.csv", "step,i,j,q,p", LatticeModel::Harper.steps().iter().map(|s| {
        let (i, j) = s.delta();
        let (q, p) = harper_site(i, j);
        format!("{},{i},{j},{q:.15},{p:.15}", s.symbol())
    }))?;
    Ok(())
}

pub fn matrix_elements(r: &mut Run) -> Result<()> {
    let m = model(&r.cfg.model);
    element_table(r, m, "elements.csv", 0)?;
    let paths = stage("enumerate", enumerate_paths_with(m, r.cfg.n, r.cfg.no_straight_runs))?;
    r.out.csv("actions.csv", "path,i,j,action", rows(&paths, |p| {
        let (i, j) = p.endpoint();
        format!("{p},{i},{j},{:.9}", path_action(p))
    }))?;
    Ok(())
}
