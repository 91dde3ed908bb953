//! Linear prediction of unmeasured path summaries from the sampled paths.
//!
//! With `y = [y_s; y_r]` split into sampled and unsampled blocks, the best
//! linear predictor of `lᵀy` given `y_s` needs the covariance blocks of the
//! split and the mean vector. The covariance comes from the link model; the
//! mean is replaced by a generalized-least-squares estimate computed from
//! `y_s` itself, giving the working predictor
//! `l_sᵀ y_s + l_rᵀ Vrs Vss⁻¹ y_s` plus an optional calibration offset.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::numeric;
use crate::selection::PathSelection;
use crate::spectral::CovarianceModel;
use crate::topology::RoutingMatrix;

/// Condition-number ceiling for the sampled covariance block.
const VSS_COND_LIMIT: f64 = 1e12;

/// The routing and covariance blocks induced by a selection: `Gs`/`Gr` rows
/// of `G`, their weighted versions `Ts = Gs C` and `Tr = Gr C`, the four
/// covariance blocks, and the solve machinery for `Vss⁻¹`.
#[derive(Debug, Clone)]
pub struct MomentPartition {
    sampled_ids: Vec<usize>,
    rest_ids: Vec<usize>,
    gs: DMatrix<f64>,
    gr: DMatrix<f64>,
    ts: DMatrix<f64>,
    tr: DMatrix<f64>,
    vss: DMatrix<f64>,
    vsr: DMatrix<f64>,
    vrs: DMatrix<f64>,
    vrr: DMatrix<f64>,
    prediction_operator: DMatrix<f64>,
    vss_chol: Cholesky<f64, Dyn>,
    variances: Vec<f64>,
}

impl MomentPartition {
    pub fn k(&self) -> usize {
        self.sampled_ids.len()
    }

    pub fn n_paths(&self) -> usize {
        self.sampled_ids.len() + self.rest_ids.len()
    }

    pub fn n_links(&self) -> usize {
        self.variances.len()
    }

    /// Path ids of the sampled block, in selection order.
    pub fn sampled_ids(&self) -> &[usize] {
        &self.sampled_ids
    }

    /// Path ids of the unsampled block, in block row order.
    pub fn rest_ids(&self) -> &[usize] {
        &self.rest_ids
    }

    pub fn gs(&self) -> &DMatrix<f64> {
        &self.gs
    }

    pub fn gr(&self) -> &DMatrix<f64> {
        &self.gr
    }

    pub fn vss(&self) -> &DMatrix<f64> {
        &self.vss
    }

    pub fn vsr(&self) -> &DMatrix<f64> {
        &self.vsr
    }

    pub fn vrs(&self) -> &DMatrix<f64> {
        &self.vrs
    }

    pub fn vrr(&self) -> &DMatrix<f64> {
        &self.vrr
    }

    /// `Vrs Vss⁻¹`, precomputed once per partition.
    pub fn prediction_operator(&self) -> &DMatrix<f64> {
        &self.prediction_operator
    }

    /// Solves `Vss z = b`.
    pub fn solve_vss(&self, b: &DVector<f64>) -> DVector<f64> {
        self.vss_chol.solve(b)
    }
}

/// Builds the sampled/unsampled moment blocks for a selection, with
/// `Σ = diag(cov.variances)`.
///
/// `Vss⁻¹` applications go through a Cholesky solve rather than an explicit
/// inverse; the block is rejected as singular when its condition number
/// exceeds 1e12.
pub fn partition_moments(
    g: &RoutingMatrix,
    cov: &CovarianceModel,
    sel: &PathSelection,
) -> Result<MomentPartition> {
    if cov.n_links() != g.n_links() {
        return Err(Error::DimensionMismatch {
            context: "covariance link count",
            expected: g.n_links(),
            got: cov.n_links(),
        });
    }
    let n_paths = g.n_paths();
    let k = sel.k;
    if sel.selected.len() != k || sel.permutation.len() != n_paths {
        return Err(Error::InvalidInput(
            "selection does not cover this path universe".into(),
        ));
    }
    let mut seen = vec![false; n_paths];
    for &p in &sel.permutation {
        if p >= n_paths || seen[p] {
            return Err(Error::InvalidInput(
                "selection permutation is not a permutation of the path ids".into(),
            ));
        }
        seen[p] = true;
    }
    if sel.permutation[..k] != sel.selected[..] {
        return Err(Error::InvalidInput(
            "selection permutation must start with the selected paths".into(),
        ));
    }

    let sampled_ids = sel.selected.clone();
    let rest_ids: Vec<usize> = sel.permutation[k..].to_vec();
    let n_links = g.n_links();

    let take_rows = |ids: &[usize]| {
        let mut m = DMatrix::zeros(ids.len(), n_links);
        for (i, &p) in ids.iter().enumerate() {
            m.set_row(i, &g.entries().row(p));
        }
        m
    };
    let gs = take_rows(&sampled_ids);
    let gr = take_rows(&rest_ids);

    let scale = |m: &DMatrix<f64>| {
        let mut t = m.clone();
        for (j, &s) in cov.factor().iter().enumerate() {
            let mut col = t.column_mut(j);
            col *= s;
        }
        t
    };
    let ts = scale(&gs);
    let tr = scale(&gr);

    let vss = &ts * ts.transpose();
    let vsr = &ts * tr.transpose();
    let vrs = &tr * ts.transpose();
    let vrr = &tr * tr.transpose();

    let (eigs, _) = numeric::symmetric_eigen_sorted(&vss)?;
    let max = eigs[0];
    let min = eigs[eigs.len() - 1];
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(cond.is_finite() && cond <= VSS_COND_LIMIT) {
        return Err(Error::SingularVss { cond });
    }
    let vss_chol = Cholesky::new(vss.clone()).ok_or(Error::SingularVss { cond })?;

    // Vrs Vss⁻¹, via Vss X = Vsr then transposing (Vss is symmetric).
    let prediction_operator = vss_chol.solve(&vsr).transpose();

    Ok(MomentPartition {
        sampled_ids,
        rest_ids,
        gs,
        gr,
        ts,
        tr,
        vss,
        vsr,
        vrs,
        vrr,
        prediction_operator,
        vss_chol,
        variances: cov.variances().to_vec(),
    })
}

/// Generalized-least-squares estimate of the per-link means from the
/// sampled path values: `μ̂ = Σ Gsᵀ Vss⁻¹ y_s`.
///
/// `Σ` is a generalized inverse of `Gsᵀ Vss⁻¹ Gs` (because `Gs Σ Gsᵀ = Vss`),
/// so this realizes the GLS normal equations while keeping two exact
/// properties: links traversed by no sampled path get exactly 0, and
/// `Gr μ̂` reproduces the `Vrs Vss⁻¹ y_s` predictor identically.
pub fn estimate_mu(y_s: &[f64], part: &MomentPartition) -> Result<DVector<f64>> {
    if y_s.len() != part.k() {
        return Err(Error::DimensionMismatch {
            context: "sampled path values",
            expected: part.k(),
            got: y_s.len(),
        });
    }
    let w = part.solve_vss(&DVector::from_column_slice(y_s));
    let mut mu = part.gs.transpose() * w;
    for (j, &v) in part.variances.iter().enumerate() {
        mu[j] *= v;
    }
    Ok(mu)
}

/// Weights over paths defining the monitored summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    weights: Vec<f64>,
}

impl LinearFunctional {
    /// `lᵀy` = mean over all paths.
    pub fn network_average(n_paths: usize) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidInput("functional over zero paths".into()));
        }
        Ok(LinearFunctional {
            weights: vec![1.0 / n_paths as f64; n_paths],
        })
    }

    /// `lᵀy` = mean over `group1` minus mean over `group2`. Groups must be
    /// non-empty and disjoint; weights sum to zero.
    pub fn group_difference(n_paths: usize, group1: &[usize], group2: &[usize]) -> Result<Self> {
        if group1.is_empty() || group2.is_empty() {
            return Err(Error::InvalidInput(
                "difference groups must be non-empty".into(),
            ));
        }
        let mut weights = vec![0.0; n_paths];
        for &p in group1 {
            if p >= n_paths {
                return Err(Error::InvalidInput(format!("path id {p} out of range")));
            }
            weights[p] = 1.0 / group1.len() as f64;
        }
        for &p in group2 {
            if p >= n_paths {
                return Err(Error::InvalidInput(format!("path id {p} out of range")));
            }
            if weights[p] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "path id {p} appears in both groups"
                )));
            }
            weights[p] = -1.0 / group2.len() as f64;
        }
        Ok(LinearFunctional { weights })
    }

    /// `lᵀy` = the value of one path.
    pub fn indicator(n_paths: usize, path_id: usize) -> Result<Self> {
        if path_id >= n_paths {
            return Err(Error::InvalidInput(format!(
                "path id {path_id} out of range"
            )));
        }
        let mut weights = vec![0.0; n_paths];
        weights[path_id] = 1.0;
        Ok(LinearFunctional { weights })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("functional over zero paths".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(
                "functional weights must be finite".into(),
            ));
        }
        Ok(LinearFunctional { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// (l_s, l_r) split along a partition's sampled/rest path order.
    pub fn split(&self, part: &MomentPartition) -> Result<(DVector<f64>, DVector<f64>)> {
        if self.weights.len() != part.n_paths() {
            return Err(Error::DimensionMismatch {
                context: "functional weights",
                expected: part.n_paths(),
                got: self.weights.len(),
            });
        }
        let l_s = DVector::from_iterator(
            part.k(),
            part.sampled_ids().iter().map(|&p| self.weights[p]),
        );
        let l_r = DVector::from_iterator(
            part.n_paths() - part.k(),
            part.rest_ids().iter().map(|&p| self.weights[p]),
        );
        Ok((l_s, l_r))
    }
}

/// A ready-to-use predictor for one functional over one partition, with an
/// optional additive calibration offset.
#[derive(Debug, Clone)]
pub struct PredictorModel {
    partition: MomentPartition,
    functional: LinearFunctional,
    l_s: DVector<f64>,
    l_r: DVector<f64>,
    bias_offset: f64,
}

impl PredictorModel {
    pub fn new(partition: MomentPartition, functional: LinearFunctional) -> Result<Self> {
        let (l_s, l_r) = functional.split(&partition)?;
        Ok(PredictorModel {
            partition,
            functional,
            l_s,
            l_r,
            bias_offset: 0.0,
        })
    }

    pub fn partition(&self) -> &MomentPartition {
        &self.partition
    }

    pub fn functional(&self) -> &LinearFunctional {
        &self.functional
    }

    pub fn bias_offset(&self) -> f64 {
        self.bias_offset
    }

    /// Predicts `lᵀy` from the sampled values:
    /// `l_sᵀ y_s + l_rᵀ Vrs Vss⁻¹ y_s + offset`.
    pub fn predict(&self, y_s: &[f64]) -> Result<f64> {
        if y_s.len() != self.partition.k() {
            return Err(Error::DimensionMismatch {
                context: "sampled path values",
                expected: self.partition.k(),
                got: y_s.len(),
            });
        }
        let ys = DVector::from_column_slice(y_s);
        let reconstructed = self.partition.prediction_operator() * &ys;
        Ok(self.l_s.dot(&ys) + self.l_r.dot(&reconstructed) + self.bias_offset)
    }

    /// The same prediction computed the long way round, through the
    /// estimated link means: `l_sᵀ y_s + l_rᵀ Gr μ̂ + offset`. Exists as a
    /// cross-check; the two routes must agree to tight tolerance.
    pub fn predict_via_mean_estimate(&self, y_s: &[f64]) -> Result<f64> {
        let mu = estimate_mu(y_s, &self.partition)?;
        let ys = DVector::from_column_slice(y_s);
        let filled = self.partition.gr() * mu;
        Ok(self.l_s.dot(&ys) + self.l_r.dot(&filled) + self.bias_offset)
    }

    /// True `lᵀ G x` for fully known link values; used for calibration and
    /// validation.
    pub fn true_value(&self, x_full: &[f64]) -> Result<f64> {
        if x_full.len() != self.partition.n_links() {
            return Err(Error::DimensionMismatch {
                context: "link values",
                expected: self.partition.n_links(),
                got: x_full.len(),
            });
        }
        let x = DVector::from_column_slice(x_full);
        let ys = self.partition.gs() * &x;
        let yr = self.partition.gr() * &x;
        Ok(self.l_s.dot(&ys) + self.l_r.dot(&yr))
    }

    /// Sampled path values `y_s = Gs x` for one fully measured epoch.
    pub fn sample_values(&self, x_full: &[f64]) -> Result<Vec<f64>> {
        if x_full.len() != self.partition.n_links() {
            return Err(Error::DimensionMismatch {
                context: "link values",
                expected: self.partition.n_links(),
                got: x_full.len(),
            });
        }
        let x = DVector::from_column_slice(x_full);
        Ok((self.partition.gs() * x).iter().copied().collect())
    }

    /// One-time calibration against a single fully measured epoch: the
    /// residual between the true functional value and the current
    /// prediction is folded into the offset. Calibrating twice on the same
    /// epoch adds nothing the second time.
    pub fn calibrated(&self, x_full: &[f64]) -> Result<PredictorModel> {
        let y_s = self.sample_values(x_full)?;
        let truth = self.true_value(x_full)?;
        let predicted = self.predict(&y_s)?;
        let mut out = self.clone();
        out.bias_offset += truth - predicted;
        Ok(out)
    }
}

/// Mean-squared prediction error of the exact best linear predictor:
/// `l_rᵀ (Vrr − Vrs Vss⁻¹ Vsr) l_r`. Depends only on covariances.
pub fn mspe_blp(part: &MomentPartition, l: &LinearFunctional) -> Result<f64> {
    let (_, l_r) = l.split(part)?;
    let a = part.vrr() * &l_r;
    let b = part.prediction_operator() * (part.vsr() * &l_r);
    Ok(l_r.dot(&a) - l_r.dot(&b))
}

/// The orthogonal projection onto the row space of `Gs C`:
/// `Bs = (Gs C)ᵀ Vss⁻¹ (Gs C)`, an n_links × n_links matrix. Idempotent and
/// symmetric up to round-off.
pub fn sampled_row_projection(part: &MomentPartition) -> DMatrix<f64> {
    part.ts.transpose() * part.vss_chol.solve(&part.ts)
}

/// The same MSPE computed geometrically: the squared norm of the part of
/// `(Gr C)ᵀ l_r` outside the sampled row space,
/// `l_rᵀ (Gr C)(I − Bs)(Gr C)ᵀ l_r`.
pub fn mspe_blp_projection(part: &MomentPartition, l: &LinearFunctional) -> Result<f64> {
    let (_, l_r) = l.split(part)?;
    let u = part.tr.transpose() * &l_r;
    let bs_u = part.ts.transpose() * part.vss_chol.solve(&(&part.ts * &u));
    Ok(u.dot(&u) - u.dot(&bs_u))
}

/// Systematic error introduced by estimating the mean from `y_s`:
/// `l_rᵀ (Vrs Vss⁻¹ Gs − Gr) μ`. The working predictor's MSPE is the BLP
/// MSPE plus the square of this value.
pub fn bias_of_eblp(part: &MomentPartition, l: &LinearFunctional, mu: &[f64]) -> Result<f64> {
    if mu.len() != part.n_links() {
        return Err(Error::DimensionMismatch {
            context: "link mean vector",
            expected: part.n_links(),
            got: mu.len(),
        });
    }
    let (_, l_r) = l.split(part)?;
    let mu = DVector::from_column_slice(mu);
    let through_sampled = part.prediction_operator() * (part.gs() * &mu);
    let direct = part.gr() * &mu;
    Ok(l_r.dot(&through_sampled) - l_r.dot(&direct))
}
