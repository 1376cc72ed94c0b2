use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const OUT_ENV: &str = "CONELAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Fd,
    Picard,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Green,
    Regime,
    Modulus,
    Barrier,
    Ratio,
    Harnack,
}

impl Check {
    pub const ALL: [Check; 6] = [Check::Green, Check::Regime, Check::Modulus, Check::Barrier, Check::Ratio, Check::Harnack];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_theta: usize,
    /// The grid reaches `r_min = 16^{-annuli}`.
    pub annuli: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_r: 384, n_theta: 128, annuli: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverChoice,
    pub eps_schedule: Vec<f64>,
    pub fd_tol: f64,
    pub fd_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Largest relative fd/picard difference at the ladder points.
    pub cross_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverChoice::Both,
            eps_schedule: conelab_core::solver::fd::default_eps_schedule(),
            fd_tol: 1e-10,
            fd_max_iter: 300,
            picard_tol: 1e-9,
            picard_max_iter: 400,
            cross_tol: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    pub slope: f64,
    /// Radius of the rotation profile.
    pub radius: f64,
    pub samples: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { slope: 1.0, radius: 100.0, samples: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursionConfig {
    pub k: usize,
    /// Constants `c`; empty means `{1}`.
    pub c: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Rows kept in each CSV (log-spaced in `k`); 0 keeps every row.
    pub rows: usize,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        RecursionConfig { k: 1_000_000, c: vec![1.0], gammas: vec![1.5, 2.0, 3.0], rows: 2000 }
    }
}

impl RecursionConfig {
    pub fn constants(&self) -> Vec<f64> {
        if self.c.is_empty() {
            vec![1.0]
        } else {
            self.c.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub pairs: usize,
    pub samples: usize,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { pairs: 100, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub seed: u64,
    /// Relative paths resolve against `$CONELAB_OUT` when set.
    pub output_dir: PathBuf,
    /// Ladder depth `K`; defaults to the deepest level the grid resolves.
    pub depth: Option<usize>,
    pub checks: Vec<Check>,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub ode: OdeConfig,
    pub recursion: RecursionConfig,
    pub green: GreenConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 1.5,
            seed: 7,
            output_dir: PathBuf::from("conelab-out"),
            depth: None,
            checks: Check::ALL.to_vec(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            ode: OdeConfig::default(),
            recursion: RecursionConfig::default(),
            green: GreenConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| bad(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.gamma) {
            return Err(bad(format!("gamma must be finite and positive, got {}", self.gamma)));
        }
        if self.grid.n_r < 4 || self.grid.n_theta < 4 || self.grid.annuli == 0 {
            return Err(bad("grid needs n_r, n_theta >= 4 and at least one annulus"));
        }
        if self.depth == Some(0) {
            return Err(bad("depth must be at least 1"));
        }
        let s = &self.solver;
        if s.eps_schedule.iter().any(|&e| !pos(e)) || s.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("eps_schedule must be positive and strictly decreasing"));
        }
        if !pos(s.fd_tol) || !pos(s.picard_tol) || !pos(s.cross_tol) || s.fd_max_iter == 0 || s.picard_max_iter == 0 {
            return Err(bad("solver tolerances and iteration limits must be positive"));
        }
        if !pos(self.ode.slope) || !pos(self.ode.radius) || self.ode.samples < 2 {
            return Err(bad("ode needs positive slope and radius and at least 2 samples"));
        }
        let r = &self.recursion;
        if r.k < 10 {
            return Err(bad(format!("recursion needs k >= 10, got {}", r.k)));
        }
        if r.c.iter().any(|&c| !pos(c)) || r.gammas.iter().any(|&g| !(g.is_finite() && g > 1.0)) || r.gammas.is_empty() {
            return Err(bad("recursion constants must be positive and every gamma must exceed 1"));
        }
        if self.green.pairs == 0 || self.green.samples == 0 {
            return Err(bad("green pairs and samples must be positive"));
        }
        Ok(())
    }

    pub fn r_min(&self) -> f64 {
        16f64.powi(-(self.grid.annuli as i32))
    }

    /// SHA-256 of the canonical JSON form, with the output location left out so
    /// that the same run written to two places hashes the same.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}
