//! Flag-value parsing and input loading shared by all subcommands.
//!
//! File problems surface as `InvalidInput`/`ParseError` so the process
//! exits 2; only numeric breakdowns exit 1.

use std::fs;
use std::path::{Path, PathBuf};

use pathmon::*;

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// `--topology`: the literal `abilene` selects the bundled network,
/// anything else is a topology CSV path.
#[derive(Debug, Clone)]
pub enum TopologySource {
    Builtin,
    File(PathBuf),
}

impl TopologySource {
    pub fn parse(s: &str) -> Self {
        if s == "abilene" {
            TopologySource::Builtin
        } else {
            TopologySource::File(PathBuf::from(s))
        }
    }

    /// Returns the topology plus the manifest label and raw text of the
    /// input that produced it.
    pub fn load(&self) -> Result<(Topology, String, String)> {
        match self {
            TopologySource::Builtin => {
                let text = assets::abilene_topology_csv().to_string();
                Ok((assets::abilene(), "topology:abilene".to_string(), text))
            }
            TopologySource::File(path) => {
                let text = read_file(path)?;
                let name = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("topology")
                    .to_string();
                let t = Topology::from_csv_str(name, &text)?;
                Ok((t, path.display().to_string(), text))
            }
        }
    }
}

/// `--cov`: `identity`, `estimate:<series csv>` (diagonal sample variances
/// over the first day of epochs), or `file:<covariance csv>`.
#[derive(Debug, Clone)]
pub enum CovSource {
    Identity,
    Estimate(PathBuf),
    File(PathBuf),
}

impl CovSource {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(CovSource::Identity);
        }
        if let Some(rest) = s.strip_prefix("estimate:") {
            return Ok(CovSource::Estimate(PathBuf::from(rest)));
        }
        if let Some(rest) = s.strip_prefix("file:") {
            return Ok(CovSource::File(PathBuf::from(rest)));
        }
        Err(Error::InvalidInput(format!(
            "covariance source must be identity, estimate:<series>, or file:<csv>, got {s}"
        )))
    }

    /// Returns the model plus (label, bytes) pairs for manifest hashing.
    pub fn resolve(&self, n_links: usize) -> Result<(CovarianceModel, Vec<(String, String)>)> {
        match self {
            CovSource::Identity => Ok((CovarianceModel::identity(n_links), Vec::new())),
            CovSource::Estimate(path) => {
                let text = read_file(path)?;
                let series = data_io::parse_link_series_str(&text, n_links)?;
                let end = data_io::DEFAULT_COVARIANCE_EPOCHS.min(series.n_epochs());
                let cov = data_io::estimate_diag_covariance(&series, 0..end)?;
                Ok((cov, vec![(path.display().to_string(), text)]))
            }
            CovSource::File(path) => {
                let text = read_file(path)?;
                let cov = data_io::parse_covariance_str(&text, n_links)?;
                Ok((cov, vec![(path.display().to_string(), text)]))
            }
        }
    }
}

/// `--k`: a positive count or `auto`. None means auto.
pub fn parse_k(s: &str) -> Result<Option<usize>> {
    if s == "auto" {
        return Ok(None);
    }
    let k: usize = s.parse().map_err(|_| {
        Error::InvalidInput(format!("k must be a positive integer or auto, got {s}"))
    })?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    Ok(Some(k))
}

/// Auto picks the effective rank of the weighted matrix at 95% energy.
pub fn resolve_k(
    requested: Option<usize>,
    g: &RoutingMatrix,
    cov: &CovarianceModel,
) -> Result<usize> {
    match requested {
        Some(k) => Ok(k),
        None => {
            let gc = weighted_matrix(g, cov)?;
            let spec = eigenspectrum(&gc, "auto-k")?;
            effective_rank(&spec, 0.95)
        }
    }
}

/// `--functional`: `mean` or `diff:<node1>,<node2>` comparing the two
/// nodes' outgoing-path groups.
pub fn parse_functional(s: &str, g: &RoutingMatrix) -> Result<LinearFunctional> {
    if s == "mean" {
        return LinearFunctional::network_average(g.n_paths());
    }
    if let Some(rest) = s.strip_prefix("diff:") {
        let mut parts = rest.splitn(2, ',');
        let a = parts.next().unwrap_or("");
        let b = parts.next().unwrap_or("");
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidInput(format!(
                "diff functional needs two node names, got {rest}"
            )));
        }
        let group1 = g.origin_paths(a);
        if group1.is_empty() {
            return Err(Error::InvalidInput(format!("unknown node {a}")));
        }
        let group2 = g.origin_paths(b);
        if group2.is_empty() {
            return Err(Error::InvalidInput(format!("unknown node {b}")));
        }
        return LinearFunctional::group_difference(g.n_paths(), &group1, &group2);
    }
    Err(Error::InvalidInput(format!(
        "functional must be mean or diff:<node1>,<node2>, got {s}"
    )))
}
