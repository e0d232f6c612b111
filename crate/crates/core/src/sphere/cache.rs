//! On-disk cache of basis and grid tables, keyed by `(N, order)`.
//!
//! Layout: one JSON document per key, file name `space-N{N}-order{order}.json`:
//!
//! ```text
//! { "version": 1, "N": .., "order": .., "V0": ..,
//!   "n_eta": .., "n_xi": ..,
//!   "nodes": [[eta, xi1, xi2], ...], "weights": [...],
//!   "basis": <Basis> }
//! ```
//!
//! Node ambient coordinates are recomputed from the Hopf angles on load.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::basis::{build_basis, Basis};
use super::grid::{build_grid, Node, QuadratureGrid};
use super::transform::SpectralSpace;
use super::CONTACT_VOLUME;
use crate::{Exec, QflowError, Result};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "QFLOW_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    #[serde(rename = "N")]
    n: usize,
    order: usize,
    #[serde(rename = "V0")]
    v0: f64,
    n_eta: usize,
    n_xi: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    basis: Basis,
}

pub fn cache_path(dir: &Path, n: usize, order: usize) -> PathBuf {
    dir.join(format!("space-N{n}-order{order}.json"))
}

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
}

pub fn save(space: &SpectralSpace, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let g = &space.grid;
    let file = CacheFile {
        version: CACHE_VERSION,
        n: space.degree(),
        order: g.order,
        v0: CONTACT_VOLUME,
        n_eta: g.n_eta,
        n_xi: g.n_xi,
        nodes: g.nodes.iter().map(|n| [n.eta, n.xi1, n.xi2]).collect(),
        weights: g.weights.clone(),
        basis: space.basis.clone(),
    };
    let path = cache_path(dir, space.degree(), g.order);
    fs::write(&path, serde_json::to_vec(&file)?)?;
    Ok(path)
}

pub fn load(dir: &Path, n: usize, order: usize, exec: Exec) -> Result<SpectralSpace> {
    let raw = fs::read(cache_path(dir, n, order))?;
    let file: CacheFile = serde_json::from_slice(&raw)?;
    if file.version != CACHE_VERSION || file.n != n || file.order != order {
        return Err(QflowError::Invalid(format!(
            "cache header mismatch: version {} N {} order {}",
            file.version, file.n, file.order
        )));
    }
    if (file.v0 - CONTACT_VOLUME).abs() > 1e-12 {
        return Err(QflowError::Invalid(format!("cache V0 {} disagrees with {}", file.v0, CONTACT_VOLUME)));
    }
    let grid = QuadratureGrid {
        order,
        n_eta: file.n_eta,
        n_xi: file.n_xi,
        nodes: file.nodes.iter().map(|[e, a, b]| Node::from_hopf(*e, *a, *b)).collect(),
        weights: file.weights,
    };
    Ok(SpectralSpace::from_parts(file.basis, grid, exec))
}

/// Loads from `dir` when a matching cache exists, otherwise builds and
/// (best effort) writes it. Without a directory it just builds.
pub fn load_or_build(dir: Option<&Path>, n: usize, order: usize, exec: Exec) -> SpectralSpace {
    if let Some(dir) = dir {
        match load(dir, n, order, exec) {
            Ok(space) => return space,
            Err(e) => log::debug!("cache miss for N={n} order={order}: {e}"),
        }
        let space = SpectralSpace::from_parts(build_basis(n), build_grid(order), exec);
        if let Err(e) = save(&space, dir) {
            log::warn!("could not write cache: {e}");
        }
        return space;
    }
    SpectralSpace::from_parts(build_basis(n), build_grid(order), exec)
}
