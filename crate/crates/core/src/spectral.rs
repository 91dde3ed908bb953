//! Eigenstructure of weighted routing matrices.
//!
//! The central object is `(GC)ᵀ(GC)` where `C = diag(σ)` carries per-link
//! standard deviations. Its eigenvalues are the squared singular values of
//! `GC`; their decay determines how few paths carry most of the signal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::{self, RANK_REL_TOL};
use crate::topology::RoutingMatrix;

/// Diagonal link covariance `Σ = diag(variances) = C Cᵀ` with
/// `C = diag(factor)`. Variances are strictly positive, so `C` is
/// invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    variances: Vec<f64>,
    factor: Vec<f64>,
}

impl CovarianceModel {
    /// Unit variance on every link.
    pub fn identity(n_links: usize) -> Self {
        CovarianceModel {
            variances: vec![1.0; n_links],
            factor: vec![1.0; n_links],
        }
    }

    pub fn from_variances(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::InvalidInput("covariance has no links".into()));
        }
        for (j, &v) in variances.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "variance for link {j} must be finite and positive, got {v}"
                )));
            }
        }
        let factor = variances.iter().map(|v| v.sqrt()).collect();
        Ok(CovarianceModel { variances, factor })
    }

    pub fn n_links(&self) -> usize {
        self.variances.len()
    }

    /// Per-link variances (ms^2).
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Per-link standard deviations (ms); `factor[j]^2 == variances[j]`.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Sub-model over the given links, in the order supplied. Used when
    /// links are deleted and the survivors keep their historical variances.
    pub fn restrict(&self, kept_links: &[usize]) -> Result<CovarianceModel> {
        let mut variances = Vec::with_capacity(kept_links.len());
        for &j in kept_links {
            if j >= self.variances.len() {
                return Err(Error::UnknownLink { id: j });
            }
            variances.push(self.variances[j]);
        }
        CovarianceModel::from_variances(variances)
    }
}

/// Eigenvalues of a `(GC)ᵀ(GC)`-style matrix, sorted non-increasing, all
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub source_label: String,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Count of eigenvalues above `max * 1e-10`; matches `rank(GC)`.
    pub fn rank(&self) -> usize {
        match self.eigenvalues.first() {
            None => 0,
            Some(&max) if max <= 0.0 => 0,
            Some(&max) => self
                .eigenvalues
                .iter()
                .filter(|&&v| v > max * RANK_REL_TOL)
                .count(),
        }
    }
}

/// Squared components of one eigenvector of `MᵀM`, indexed by link.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorEnergy {
    /// Which eigenvector, 0 = largest eigenvalue.
    pub which: usize,
    pub eigenvalue: f64,
    /// Per-link energy; sums to 1.
    pub energy: Vec<f64>,
    /// True when the eigenvalue is within tolerance of a neighbor, making
    /// the individual eigenvector basis-dependent.
    pub ambiguous: bool,
}

/// `G C`: each routing-matrix column scaled by that link's standard
/// deviation.
pub fn weighted_matrix(g: &RoutingMatrix, cov: &CovarianceModel) -> Result<DMatrix<f64>> {
    if cov.n_links() != g.n_links() {
        return Err(Error::DimensionMismatch {
            context: "covariance link count",
            expected: g.n_links(),
            got: cov.n_links(),
        });
    }
    let mut w = g.entries().clone();
    for (j, &s) in cov.factor().iter().enumerate() {
        let mut col = w.column_mut(j);
        col *= s;
    }
    Ok(w)
}

/// Eigenvalues of `MᵀM`, sorted descending. Tiny negative values from
/// round-off are clamped to zero; genuinely negative ones are an error.
pub fn eigenspectrum(m: &DMatrix<f64>, label: impl Into<String>) -> Result<Spectrum> {
    if m.is_empty() {
        return Err(Error::InvalidInput("empty matrix has no spectrum".into()));
    }
    let gram = m.transpose() * m;
    let (mut eigenvalues, _) = numeric::symmetric_eigen_sorted(&gram)?;
    let max = eigenvalues[0].max(0.0);
    for v in eigenvalues.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 * max.max(1.0) {
                return Err(Error::NumericalFailure(format!(
                    "negative eigenvalue {v} in a Gram matrix"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        source_label: label.into(),
    })
}

/// Divides by the leading eigenvalue so curves from different matrices
/// overlay on one plot.
pub fn scale_to_unit_max(spec: &Spectrum) -> Result<Spectrum> {
    let max = *spec.eigenvalues.first().ok_or(Error::DegenerateSpectrum)?;
    if max <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(Spectrum {
        eigenvalues: spec.eigenvalues.iter().map(|v| v / max).collect(),
        source_label: spec.source_label.clone(),
    })
}

/// Smallest `k` whose leading eigenvalues hold at least `energy_fraction`
/// of the total. A quantitative stand-in for reading the knee off a
/// spectrum plot; 0.95 is the conventional choice here.
pub fn effective_rank(spec: &Spectrum, energy_fraction: f64) -> Result<usize> {
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "energy fraction must be in (0, 1], got {energy_fraction}"
        )));
    }
    let total: f64 = spec.eigenvalues.iter().sum();
    if spec.is_empty() || total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let target = energy_fraction * total;
    let mut cum = 0.0;
    for (i, &v) in spec.eigenvalues.iter().enumerate() {
        cum += v;
        if cum >= target {
            return Ok(i + 1);
        }
    }
    Ok(spec.len())
}

/// Energy (squared components) of the eigenvector of `MᵀM` belonging to
/// the `which`-th largest eigenvalue. Squaring removes the sign ambiguity;
/// the `ambiguous` flag reports near-degenerate eigenvalues, where energy
/// of a single vector is basis-dependent.
pub fn eigenvector_energy(m: &DMatrix<f64>, which: usize) -> Result<EigenvectorEnergy> {
    if m.is_empty() {
        return Err(Error::InvalidInput(
            "empty matrix has no eigenvectors".into(),
        ));
    }
    let n = m.ncols();
    if which >= n {
        return Err(Error::InvalidInput(format!(
            "eigenvector index {which} out of range for {n} links"
        )));
    }
    let gram = m.transpose() * m;
    let (eigenvalues, vectors) = numeric::symmetric_eigen_sorted(&gram)?;
    let tol = 1e-8 * eigenvalues[0].max(0.0);
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    let ambiguous = (which > 0 && close(eigenvalues[which - 1], eigenvalues[which]))
        || (which + 1 < n && close(eigenvalues[which], eigenvalues[which + 1]));
    let col = vectors.column(which);
    let energy: Vec<f64> = col.iter().map(|v| v * v).collect();
    Ok(EigenvectorEnergy {
        which,
        eigenvalue: eigenvalues[which],
        energy,
        ambiguous,
    })
}
