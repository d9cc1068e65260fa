use crate::config::{Experiment, ExperimentConfig};

pub struct CatalogEntry {
    pub experiment: Experiment,
    pub anchor: &'static str,
    pub summary: &'static str,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    Experiment::ALL
        .into_iter()
        .map(|e| {
            let (anchor, summary) = match e {
                Experiment::Revival => ("exact revival on the circle", "quadratic dispersion returns the packet at t = 2πk/ħ"),
                Experiment::Fractional => ("fractional revivals", "Gauss-sum superposition of q copies at t = (p/q)·2π/ħ"),
                Experiment::Airy => ("dispersion defeats localization", "cubic dispersion leaves an Airy profile at the revival time"),
                Experiment::Squeezed => ("squeezed reconstruction", "exponential envelope of a squeezed packet at the revival time"),
                Experiment::ProductMode => ("product-mode revivals", "per-level translations for H' = aτh₁ + bτ² + …"),
                Experiment::Ehrenfest => ("Ehrenfest-time approximation", "Gaussian approximant error against split-step, ħ^{1/2} scaling"),
                Experiment::Homoclinic => ("homoclinic reconstruction", "autocorrelation returns at logarithmic times near a saddle"),
                Experiment::Iterate => ("iterated separatrix map", "norm drift of U and the n-fold reconstruction"),
                Experiment::Pendulum => ("pendulum lattice paths", "diagonal walks, arc actions and path sums"),
                Experiment::Harper => ("Harper lattice structure", "torus overlaps at lattice endpoints against random probes"),
                Experiment::MatrixElements => ("path-sum matrix elements", "Σ e^{iS/ħ}⟨a, V_Γ b⟩ over walks to each endpoint"),
            };
            CatalogEntry { experiment: e, anchor, summary }
        })
        .collect()
}

/// Short `key = value` rendering of the defaults that matter for an experiment.
pub fn default_parameters(e: Experiment) -> String {
    let c = ExperimentConfig::defaults(e);
    let list = |v: &[f64]| v.iter().map(|h| format!("{h:e}")).collect::<Vec<_>>().join(", ");
    match e {
        Experiment::Revival => format!("hbar = {:.6e}, grid_n = {}", c.hbar, c.grid_n),
        Experiment::Fractional => format!("p = {}, q = {}, hbar = {:.6e}, grid_n = {}", c.p, c.q, c.hbar, c.grid_n),
        Experiment::Airy => format!("c = {}, d = {}, s = {}, hbar_list = [{}]", c.c, c.d, c.s, list(&c.hbar_list)),
        Experiment::Squeezed => format!("eps = {}, s = {}, c = {}, hbar_list = [{}]", c.eps, c.s, c.c, list(&c.hbar_list)),
        Experiment::ProductMode => format!("a = {}, b = {}, levels = {}, hbar = {:.6e}", c.a, c.b, c.n, c.hbar),
        Experiment::Ehrenfest => format!("system = {}, t = {}, hbar_list = [{}]", c.system, c.t, list(&c.hbar_list)),
        Experiment::Homoclinic => format!("system = {}, gamma = {}, hbar_list = [{}]", c.system, c.gamma, list(&c.hbar_list)),
        Experiment::Iterate => format!("gamma = {}, n = {}, hbar_list = [{}]", c.gamma, c.n, list(&c.hbar_list)),
        Experiment::Pendulum => format!("n = {}, gamma = {}, hbar = {:e}", c.n, c.gamma, c.hbar),
        Experiment::Harper => format!("N = {}, n = {}, probes = {}, seed = {}", c.big_n, c.n, c.probes, c.seed),
        Experiment::MatrixElements => format!("model = {}, n = {}, gamma = {}, hbar = {:e}", c.model, c.n, c.gamma, c.hbar),
    }
}
