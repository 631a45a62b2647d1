//! Experiment configuration: built-in defaults, optional `--paper-scale`
//! defaults, a TOML file, then command-line flags, each overriding the last.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig2a,
    Fig2b,
    Fig3,
    Reconstruct,
    Measure,
    Build,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3 => "fig3",
            Self::Reconstruct => "reconstruct",
            Self::Measure => "measure",
            Self::Build => "build",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Source of the dynamics for `measure`, `build` and `reconstruct`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Dissipative two-spin XX chain.
    Xx,
    /// Random-unitary dephasing channel (no environment).
    Ruqdm,
    /// Unitary dephasing with a discretized position environment.
    Uqdm,
    /// Kraus channel read from `model.channel`.
    Channel,
    /// Process tensor read from `model.target`.
    Target,
    /// Random exact ansatz with `fit.env_dim` and `fit.kraus_rank`.
    Random,
}

/// Contents of the TOML file; every field is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub paper_scale: Option<bool>,
    pub model: ModelFile,
    pub fit: FitFile,
    pub uqdm: UqdmFile,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFile {
    pub kind: Option<ModelKind>,
    pub gamma: Option<Vec<f64>>,
    pub n: Option<f64>,
    pub delta: Option<f64>,
    pub coupling: Option<f64>,
    pub system: Option<String>,
    pub channel: Option<PathBuf>,
    pub target: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitFile {
    pub env_dim: Option<usize>,
    pub kraus_rank: Option<usize>,
    pub k_schedule: Option<Vec<usize>>,
    pub restarts: Option<usize>,
    pub max_iter: Option<usize>,
    pub ftol: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UqdmFile {
    pub g: Option<f64>,
    pub grid_points: Option<usize>,
    /// Half-width of the position grid in units of `γ`.
    pub halfwidth: Option<f64>,
    pub j_max: Option<usize>,
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub paper_scale: bool,
    pub k: Option<usize>,
    pub gamma: Option<Vec<f64>>,
    pub n: Option<f64>,
    pub delta: Option<f64>,
    pub env_dim: Option<usize>,
    pub kraus_rank: Option<usize>,
    pub model: Option<ModelKind>,
    pub channel: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub j_max: Option<usize>,
    pub grid_points: Option<usize>,
    pub materialize: bool,
}

/// Fully resolved settings; echoed into every metadata sidecar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub experiment: Experiment,
    pub seed: u64,
    pub k: usize,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub format: Format,
    pub paper_scale: bool,
    /// `build` also writes the dense Choi tensor.
    pub materialize: bool,
    pub model: ModelSettings,
    pub fit: FitSettings,
    pub uqdm: UqdmSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSettings {
    pub kind: ModelKind,
    pub gamma: Vec<f64>,
    pub n: f64,
    pub delta: f64,
    pub coupling: f64,
    pub system: String,
    pub channel: Option<PathBuf>,
    pub target: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSettings {
    pub env_dim: usize,
    pub kraus_rank: usize,
    pub k_schedule: Vec<usize>,
    pub restarts: usize,
    pub max_iter: usize,
    pub ftol: f64,
    pub penalty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UqdmSettings {
    pub g: f64,
    pub grid_points: usize,
    pub halfwidth: f64,
    pub j_max: usize,
}

pub fn read_file(path: &std::path::Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::File(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl Settings {
    pub fn resolve(experiment: Experiment, file: &FileConfig, flags: &Overrides) -> Result<Self, CliError> {
        if let Some(e) = file.experiment {
            if e != experiment {
                return Err(CliError::Config(format!(
                    "config file is for `{}` but `{}` was requested",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        let paper = flags.paper_scale || file.paper_scale.unwrap_or(false);
        let (k, grid, restarts) = if paper { (51, 5000, 5) } else { (20, 500, 2) };
        let (gamma, n, delta) = match experiment {
            Experiment::Fig2a => (vec![0.0, 1.0, 5.0], 0.0, 0.3),
            Experiment::Fig2b => (vec![5.0, 10.0, 20.0], 0.5, 0.3),
            Experiment::Fig3 => (vec![0.5, 1.0, 2.0], 0.0, 0.1),
            _ => (vec![1.0], 0.0, 0.3),
        };
        let m = &file.model;
        let f = &file.fit;
        let u = &file.uqdm;
        let k = flags.k.or(file.k).unwrap_or(k);
        // the default schedule never asks for more steps than the run has
        let schedule: Vec<usize> = (2..=6).filter(|&j| j <= k).collect();
        let s = Settings {
            experiment,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            k,
            out: flags.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
            paper_scale: paper,
            materialize: flags.materialize,
            model: ModelSettings {
                kind: flags.model.or(m.kind).unwrap_or(ModelKind::Xx),
                gamma: flags.gamma.clone().or(m.gamma.clone()).unwrap_or(gamma),
                n: flags.n.or(m.n).unwrap_or(n),
                delta: flags.delta.or(m.delta).unwrap_or(delta),
                coupling: m.coupling.unwrap_or(1.0),
                system: m.system.clone().unwrap_or_else(|| "plus".into()),
                channel: flags.channel.clone().or(m.channel.clone()),
                target: flags.target.clone().or(m.target.clone()),
            },
            fit: FitSettings {
                env_dim: flags.env_dim.or(f.env_dim).unwrap_or(2),
                kraus_rank: flags.kraus_rank.or(f.kraus_rank).unwrap_or(16),
                k_schedule: f.k_schedule.clone().unwrap_or(if schedule.is_empty() { vec![k] } else { schedule }),
                restarts: flags.restarts.or(f.restarts).unwrap_or(restarts),
                max_iter: f.max_iter.unwrap_or(10_000),
                ftol: f.ftol.unwrap_or(1e-8),
                penalty: f.penalty.unwrap_or(0.0),
            },
            uqdm: UqdmSettings {
                g: u.g.unwrap_or(1.0),
                grid_points: flags.grid_points.or(u.grid_points).unwrap_or(grid),
                halfwidth: u.halfwidth.unwrap_or(100.0),
                j_max: flags.j_max.or(u.j_max).unwrap_or(200),
            },
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if matches!(self.experiment, Experiment::Fig2a | Experiment::Fig2b) && self.k < 10 {
            return bad(format!("fig2 needs k >= 10, got {}", self.k));
        }
        if self.model.gamma.is_empty() {
            return bad("gamma list is empty".into());
        }
        if self.model.gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return bad("gamma values must be finite and nonnegative".into());
        }
        if !(self.model.delta > 0.0) || !self.model.delta.is_finite() {
            return bad("delta must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.model.n) {
            return bad(format!("n must lie in [0, 1], got {}", self.model.n));
        }
        if self.fit.k_schedule.is_empty() || self.fit.k_schedule.windows(2).any(|w| w[1] < w[0]) {
            return bad("k_schedule must be a nonempty nondecreasing list".into());
        }
        if self.uqdm.j_max == 0 || self.uqdm.grid_points < 2 {
            return bad("uqdm needs j_max >= 1 and at least two grid points".into());
        }
        Ok(())
    }

    /// Canonical JSON of the settings.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("settings serialize")
    }

    /// SHA-256 of the canonical JSON echo, in hex.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.echo()).expect("settings serialize");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("seed = 4\nk = 12\n[model]\ngamma = [2.0]\nn = 0.25\n").unwrap();
        let flags = Overrides { seed: Some(9), gamma: Some(vec![3.0]), ..Default::default() };
        let s = Settings::resolve(Experiment::Measure, &file, &flags).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.k, 12);
        assert_eq!(s.model.gamma, vec![3.0]);
        assert_eq!(s.model.n, 0.25);
    }

    #[test]
    fn paper_scale_defaults() {
        let flags = Overrides { paper_scale: true, ..Default::default() };
        let s = Settings::resolve(Experiment::Fig2a, &FileConfig::default(), &flags).unwrap();
        assert_eq!((s.k, s.fit.restarts, s.uqdm.grid_points), (51, 5, 5000));
        let s = Settings::resolve(Experiment::Fig3, &FileConfig::default(), &Overrides::default()).unwrap();
        assert_eq!((s.k, s.fit.restarts, s.uqdm.grid_points), (20, 2, 500));
        assert_eq!(s.model.gamma, vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_settings() {
        let flags = Overrides { k: Some(5), ..Default::default() };
        assert!(Settings::resolve(Experiment::Fig2b, &FileConfig::default(), &flags).is_err());
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
        let file: FileConfig = toml::from_str("experiment = \"fig3\"").unwrap();
        assert!(Settings::resolve(Experiment::Measure, &file, &Overrides::default()).is_err());
    }

    #[test]
    fn hash_tracks_settings() {
        let a = Settings::resolve(Experiment::Fig3, &FileConfig::default(), &Overrides::default()).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
