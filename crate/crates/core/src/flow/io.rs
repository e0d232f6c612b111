//! CSV time series and JSON snapshots.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FlowRecord;
use crate::sphere::{ModeIndex, Part, SpectralField};
use crate::{QflowError, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMode {
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub part: Part,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub t: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "W0")]
    pub w0: f64,
    pub modes: Vec<SnapshotMode>,
}

impl Snapshot {
    pub fn new(t: f64, lambda: &SpectralField, v0: f64, w0: f64) -> Self {
        let modes = lambda
            .iter()
            .map(|(m, coeff)| SnapshotMode { p: m.p, q: m.q, m: m.m, part: m.part, coeff })
            .collect();
        Self { version: SNAPSHOT_VERSION, t, n: lambda.degree(), v0, w0, modes }
    }

    pub fn field(&self) -> Result<SpectralField> {
        let mut f = SpectralField::zeros(self.n);
        for e in &self.modes {
            let m = ModeIndex::new(e.p, e.q, e.m, e.part)
                .filter(|m| m.degree() <= self.n)
                .ok_or_else(|| QflowError::Invalid(format!("bad snapshot mode ({},{},{},{})", e.p, e.q, e.m, e.part)))?;
            f.set(&m, e.coeff);
        }
        Ok(f)
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    let text = serde_json::to_string_pretty(snap)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let snap: Snapshot = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if snap.version != SNAPSHOT_VERSION {
        return Err(QflowError::Invalid(format!("snapshot version {} (expected {SNAPSHOT_VERSION})", snap.version)));
    }
    Ok(snap)
}

pub const CSV_HEADER: &str = "t,energy,dissipation,r,volume,q_l2,q_linf,lambda_ker_norm,lambda_perp_norm";

pub fn write_csv<W: Write>(mut out: W, records: &[FlowRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.energy, r.dissipation, r.r, r.volume, r.q_l2, r.q_linf, r.lambda_ker_norm, r.lambda_perp_norm
        )?;
    }
    Ok(())
}
