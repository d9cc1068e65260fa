//! One PASS/FAIL line per acceptance criterion. Runs without the libtest harness so the
//! summary prints in order; exits non-zero when any criterion fails.

use semiclassical_lab::properties::property_suite;
use semiclassical_lab::{run, Check, Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::time::Instant;

struct Outcome {
    checks: Vec<Check>,
    seconds: f64,
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("semiclassical-acceptance-{}", std::process::id())).join(name);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn experiment(cfg: ExperimentConfig, tag: &str) -> Outcome {
    cfg.validate().expect("acceptance config must validate");
    let start = Instant::now();
    let checks = match run(&cfg, &scratch(tag)) {
        Ok(m) => m.checks,
        Err(e) => vec![Check::new(0, &format!("{tag} run"), false, format!("{e:#}"))],
    };
    Outcome { checks, seconds: start.elapsed().as_secs_f64() }
}

fn report(k: u8, title: &str, budget: f64, outcomes: &[&Outcome]) -> bool {
    let seconds: f64 = outcomes.iter().map(|o| o.seconds).sum();
    let mut checks: Vec<&Check> = outcomes.iter().flat_map(|o| o.checks.iter()).filter(|c| c.criterion == k || (c.criterion == 0 && !c.pass)).collect();
    let runtime = Check::new(k, &format!("runtime under {budget} s"), seconds < budget, format!("{seconds:.2} s"));
    checks.push(&runtime);
    let pass = checks.iter().all(|c| c.pass);
    println!("{} criterion {k:>2} {title}", if pass { "PASS" } else { "FAIL" });
    for c in checks {
        println!("       {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    pass
}

fn main() {
    let d = ExperimentConfig::defaults;
    let mut all = true;

    let c1 = experiment(d(Experiment::Revival), "revival");
    all &= report(1, "exact revival", 1.0, &[&c1]);

    let fr: Vec<Outcome> = [(1, 2), (1, 3), (1, 4), (2, 5)]
        .iter()
        .map(|&(p, q)| experiment(ExperimentConfig { p, q, ..d(Experiment::Fractional) }, &format!("fractional-{p}-{q}")))
        .collect();
    all &= report(2, "fractional revivals", 5.0, &fr.iter().collect::<Vec<_>>());

    let c3 = experiment(ExperimentConfig { c: 0.1, hbar_list: vec![1e-3, 3e-4, 1e-4], ..d(Experiment::Airy) }, "airy");
    all &= report(3, "dispersion defeats localization", 60.0, &[&c3]);

    let c4 = experiment(ExperimentConfig { eps: 0.3, s: 1, c: 0.1, d: 0.0, hbar_list: vec![1e-3, 1e-4], ..d(Experiment::Squeezed) }, "squeezed");
    all &= report(4, "squeezed reconstruction", 30.0, &[&c4]);

    let c5 = experiment(ExperimentConfig { t: 1.0, hbar_list: vec![1e-2, 3e-3, 1e-3], ..d(Experiment::Ehrenfest) }, "ehrenfest");
    all &= report(5, "Ehrenfest scaling", 120.0, &[&c5]);

    let c67 = experiment(ExperimentConfig { t: 1.0, hbar_list: vec![3e-3, 1e-3, 3e-4], ..d(Experiment::Homoclinic) }, "homoclinic");
    all &= report(6, "homoclinic revival time", 600.0, &[&c67]);
    all &= report(7, "localization alternation", 600.0, &[&c67]);

    let c8 = experiment(ExperimentConfig { gamma: 0.15, hbar_list: vec![1e-3, 1e-4, 1e-5], ..d(Experiment::Iterate) }, "iterate");
    all &= report(8, "symbol-map unitarity", 30.0, &[&c8]);

    let c9 = experiment(ExperimentConfig { big_n: 1024, probes: 8, ..d(Experiment::Harper) }, "harper");
    all &= report(9, "Harper structure", 300.0, &[&c9]);

    let start = Instant::now();
    let checks = property_suite(20_241_016, 8).unwrap_or_else(|e| vec![Check::new(10, "property suite", false, e.to_string())]);
    let c10 = Outcome { checks, seconds: start.elapsed().as_secs_f64() };
    all &= report(10, "property suites", 120.0, &[&c10]);

    let _ = std::fs::remove_dir_all(std::env::temp_dir().join(format!("semiclassical-acceptance-{}", std::process::id())));
    if !all {
        std::process::exit(1);
    }
}
