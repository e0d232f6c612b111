pub mod flow;
pub mod heisenberg;
pub mod moser;
pub mod spectrum;
pub mod verify;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use qflow_core::sphere::cache::{cache_dir_from_env, load_or_build};
use qflow_core::sphere::SpectralSpace;
use qflow_core::{Exec, QflowError};

use crate::config::{Config, ConfigError, SectionView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "{m}"),
            Self::Numerical(m) => write!(f, "numerical abort: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Usage(e.0)
    }
}

impl From<QflowError> for CliError {
    fn from(e: QflowError) -> Self {
        match e {
            QflowError::Overflow(_)
            | QflowError::Divergence(_)
            | QflowError::Singular(_)
            | QflowError::NoConvergence { .. }
            | QflowError::Disagreement(_) => Self::Numerical(e.to_string()),
            QflowError::OffSphere(_)
            | QflowError::DegreeMismatch { .. }
            | QflowError::Invalid(_)
            | QflowError::Io(_)
            | QflowError::Json(_) => Self::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

/// Parsed command line shared by all subcommands.
pub struct Invocation {
    pub config: Config,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

impl Invocation {
    pub fn new(config: Config, seed: Option<u64>, out: Option<PathBuf>, resume: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(Self { config, seed, out, resume })
    }

    pub fn section(&self, name: &str) -> SectionView<'_> {
        self.config.section(name)
    }

    /// `--seed` if given, else the section's `seed`, else `default`.
    pub fn seed(&self, section: &SectionView, default: u64) -> Result<u64, CliError> {
        match self.seed {
            Some(s) => Ok(s),
            None => Ok(section.get("seed", default)?),
        }
    }

    /// Writes `name` under `--out`, if given.
    pub fn write_output(&self, name: &str, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = &self.out {
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }

    pub fn out_path(&self, name: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|d| d.join(name))
    }

    /// Appends a timestamped line to the sidecar `run.log`; the only place
    /// wall-clock time is recorded.
    pub fn log_event(&self, command: &str, event: &str) {
        let Some(dir) = &self.out else { return };
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let line = format!("{secs:.3} {command} {event}\n");
        if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log")) {
            let _ = f.write_all(line.as_bytes());
        }
    }
}

/// Basis and grid for `(n, order)`, through the cache in `QFLOW_CACHE_DIR`
/// when set.
pub fn spectral_space(n: usize, order: usize) -> Result<SpectralSpace, CliError> {
    if n == 0 {
        return Err(CliError::Usage("N must be at least 1".into()));
    }
    if order < 2 * n {
        return Err(CliError::Usage(format!("grid order {order} is below 2N = {}", 2 * n)));
    }
    let dir = cache_dir_from_env();
    Ok(load_or_build(dir.as_deref(), n, order, Exec::default()))
}

pub fn display(path: &Path) -> String {
    path.display().to_string()
}
