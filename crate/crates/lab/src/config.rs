use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Revival,
    Fractional,
    Airy,
    Squeezed,
    ProductMode,
    Ehrenfest,
    Homoclinic,
    Iterate,
    Pendulum,
    Harper,
    MatrixElements,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Revival,
        Experiment::Fractional,
        Experiment::Airy,
        Experiment::Squeezed,
        Experiment::ProductMode,
        Experiment::Ehrenfest,
        Experiment::Homoclinic,
        Experiment::Iterate,
        Experiment::Pendulum,
        Experiment::Harper,
        Experiment::MatrixElements,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Revival => "revival",
            Experiment::Fractional => "fractional",
            Experiment::Airy => "airy",
            Experiment::Squeezed => "squeezed",
            Experiment::ProductMode => "product-mode",
            Experiment::Ehrenfest => "ehrenfest",
            Experiment::Homoclinic => "homoclinic",
            Experiment::Iterate => "iterate",
            Experiment::Pendulum => "pendulum",
            Experiment::Harper => "harper",
            Experiment::MatrixElements => "matrix-elements",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Raw key/value configuration; every field except `experiment` is optional and
/// falls back to the catalog default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: String,
    pub hbar: Option<f64>,
    pub hbar_list: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub eps: Option<f64>,
    pub s: Option<u32>,
    pub gamma: Option<f64>,
    pub p: Option<i64>,
    pub q: Option<i64>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub t: Option<f64>,
    pub system: Option<String>,
    pub model: Option<String>,
    pub no_straight_runs: Option<bool>,
    pub probes: Option<usize>,
    pub grid_n: Option<usize>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// Validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub hbar: f64,
    pub hbar_list: Vec<f64>,
    pub c: f64,
    pub d: f64,
    pub eps: f64,
    pub s: u32,
    pub gamma: f64,
    pub p: i64,
    pub q: i64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub system: String,
    pub model: String,
    pub no_straight_runs: bool,
    pub probes: usize,
    pub grid_n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl ExperimentConfig {
    pub fn defaults(e: Experiment) -> Self {
        use std::f64::consts::PI;
        let mut c = ExperimentConfig {
            experiment: e,
            hbar: 1e-3,
            hbar_list: vec![],
            c: 0.1,
            d: 0.0,
            eps: 0.3,
            s: 1,
            gamma: 0.15,
            p: 1,
            q: 3,
            n: 2,
            big_n: 1024,
            a: 0.05,
            b: 1.0,
            t: 1.0,
            system: "double-well".into(),
            model: "harper".into(),
            no_straight_runs: false,
            probes: 8,
            grid_n: 0,
            x_min: -2.5,
            x_max: 2.5,
            dt: 1e-3,
            seed: 1,
            output_dir: None,
        };
        match e {
            Experiment::Revival => {
                c.hbar = 2.0 * PI / 1024.0;
                c.grid_n = 4096;
            }
            Experiment::Fractional => {
                c.hbar = 2.0 * PI / 4096.0;
                c.grid_n = 8192;
            }
            Experiment::Airy => c.hbar_list = vec![1e-3, 3e-4, 1e-4],
            Experiment::Squeezed => c.hbar_list = vec![1e-3, 1e-4],
            Experiment::ProductMode => {
                c.hbar = 2.0 * PI / 1024.0;
                c.grid_n = 512;
                c.n = 3;
                c.c = 0.0;
            }
            Experiment::Ehrenfest => c.hbar_list = vec![1e-2, 3e-3, 1e-3],
            Experiment::Homoclinic => c.hbar_list = vec![3e-3, 1e-3, 3e-4],
            Experiment::Iterate => c.hbar_list = vec![1e-3, 1e-4, 1e-5],
            Experiment::Pendulum => {
                c.model = "pendulum".into();
                c.n = 4;
            }
            Experiment::Harper => c.n = 4,
            Experiment::MatrixElements => c.n = 2,
        }
        c
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let e = Experiment::from_name(&raw.experiment).ok_or_else(|| ConfigError::UnknownExperiment(raw.experiment.clone()))?;
        let mut c = Self::defaults(e);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = raw.$f { c.$f = v; } )* };
        }
        take!(hbar, hbar_list, c, d, eps, s, gamma, p, q, n, big_n, a, b, t, system, model, no_straight_runs, probes, grid_n, x_min, x_max, dt, seed);
        c.output_dir = raw.output_dir;
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.hbar > 0.0 && self.hbar < 1.0) {
            return bad(format!("hbar = {} outside (0, 1)", self.hbar));
        }
        if let Some(h) = self.hbar_list.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
            return bad(format!("hbar_list entry {h} outside (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.2) {
            return bad(format!("gamma = {} outside (0, 1/5)", self.gamma));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps = {} outside (0, 1)", self.eps));
        }
        if self.s < 1 {
            return bad("s must be at least 1".into());
        }
        if self.dt <= 0.0 || self.x_max <= self.x_min {
            return bad("dt must be positive and x_min < x_max".into());
        }
        match self.experiment {
            Experiment::Fractional => {
                if self.q < 1 || gcd(self.p, self.q) != 1 {
                    return bad(format!("p = {}, q = {} must be coprime with q ≥ 1", self.p, self.q));
                }
            }
            Experiment::Airy | Experiment::Squeezed => {
                if self.c == 0.0 {
                    return bad("c must be nonzero".into());
                }
                if self.hbar_list.len() < 2 {
                    return bad("hbar_list needs at least two values".into());
                }
            }
            Experiment::Ehrenfest | Experiment::Homoclinic | Experiment::Iterate => {
                if self.hbar_list.len() < 3 {
                    return bad("hbar_list needs at least three values".into());
                }
                if semiclassical::classical::HamiltonianSystem::builtin(&self.system).is_none() {
                    return bad(format!("unknown system {:?}", self.system));
                }
            }
            Experiment::Pendulum | Experiment::Harper | Experiment::MatrixElements => {
                if self.n > semiclassical::reconstruction::MAX_PATH_LENGTH {
                    return bad(format!("n = {} above the path-length guard", self.n));
                }
                if !matches!(self.model.as_str(), "pendulum" | "harper") {
                    return bad(format!("unknown model {:?}", self.model));
                }
                if self.experiment == Experiment::Harper && (self.big_n < 8 || self.big_n > 4096) {
                    return bad(format!("N = {} outside [8, 4096]", self.big_n));
                }
            }
            _ => {}
        }
        if matches!(self.experiment, Experiment::Revival | Experiment::Fractional | Experiment::ProductMode) && !self.grid_n.is_power_of_two() {
            return bad(format!("grid_n = {} must be a power of two", self.grid_n));
        }
        Ok(())
    }
}
