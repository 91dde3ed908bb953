//! Choosing which k paths to measure.
//!
//! The selection works on the weighted matrix `GC`: take its SVD
//! `GC = U Δ Vᵀ`, keep the k leading left-singular columns `U_(k)`, and run
//! QR factorization with column pivoting on `U_(k)ᵀ`. The pivot order ranks
//! paths by how much of the dominant singular subspace they pin down; the
//! first k pivots are the paths to measure. The pivoting must rerun for
//! each k because `U_(k)` itself changes with k.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::{self, RANK_REL_TOL};
use crate::spectral::{weighted_matrix, CovarianceModel, Spectrum};
use crate::topology::RoutingMatrix;

/// Result of a k-path selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSelection {
    pub k: usize,
    /// The k chosen path ids, in pivot order (most informative first).
    pub selected: Vec<usize>,
    /// Full permutation of all path ids; the first k entries are `selected`,
    /// the rest follow in ascending id order.
    pub permutation: Vec<usize>,
    /// Spectrum of the weighted matrix the selection was computed from.
    /// Empty for selections constructed by hand.
    pub source_spectrum: Spectrum,
}

impl PathSelection {
    /// Wraps an explicit choice of paths, bypassing the pivoting. Intended
    /// for baselines and comparisons; no rank guarantee is made, so moment
    /// partitioning may still reject the choice.
    pub fn manual(n_paths: usize, selected: Vec<usize>) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::InvalidInput("manual selection is empty".into()));
        }
        let mut chosen = vec![false; n_paths];
        for &p in &selected {
            if p >= n_paths {
                return Err(Error::InvalidInput(format!(
                    "path id {p} out of range ({n_paths} paths)"
                )));
            }
            if chosen[p] {
                return Err(Error::InvalidInput(format!("duplicate path id {p}")));
            }
            chosen[p] = true;
        }
        let mut permutation = selected.clone();
        permutation.extend((0..n_paths).filter(|&p| !chosen[p]));
        Ok(PathSelection {
            k: selected.len(),
            selected,
            permutation,
            source_spectrum: Spectrum {
                eigenvalues: Vec::new(),
                source_label: "manual".into(),
            },
        })
    }
}

/// Column order from QR with column pivoting on `m`, most informative
/// first. At each step the remaining column with the largest residual norm
/// is chosen; near-ties (within 1e-12 relative) go to the lowest column
/// index so binary routing matrices pivot deterministically.
fn column_pivot_order(m: &DMatrix<f64>) -> Vec<usize> {
    let rows = m.nrows();
    let cols = m.ncols();
    let steps = rows.min(cols);
    let mut w = m.clone();
    let mut order: Vec<usize> = (0..cols).collect();

    for step in 0..steps {
        // Residual norms of the not-yet-pivoted columns, recomputed from the
        // updated matrix rather than downdated, for accuracy.
        let mut best = f64::NEG_INFINITY;
        for &c in &order[step..] {
            let norm = w.view((step, c), (rows - step, 1)).norm();
            if norm > best {
                best = norm;
            }
        }
        if best <= 0.0 {
            break;
        }
        let tol = 1e-12 * best;
        let mut pick = step;
        let mut pick_col = usize::MAX;
        for (pos, &c) in order.iter().enumerate().skip(step) {
            let norm = w.view((step, c), (rows - step, 1)).norm();
            if norm >= best - tol && c < pick_col {
                pick_col = c;
                pick = pos;
            }
        }
        order.swap(step, pick);

        // Householder reflector zeroing the picked column below the
        // diagonal, applied to every remaining column.
        let c = order[step];
        let mut v: Vec<f64> = (step..rows).map(|r| w[(r, c)]).collect();
        let alpha = -v[0].signum() * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 <= 0.0 {
            continue;
        }
        for &cc in &order[step..] {
            let dot: f64 = (step..rows).map(|r| v[r - step] * w[(r, cc)]).sum();
            let scale = 2.0 * dot / vnorm2;
            for r in step..rows {
                w[(r, cc)] -= scale * v[r - step];
            }
        }
    }
    order
}

/// Selects k paths to measure.
///
/// Deterministic: identical inputs give identical selections. The greedy
/// pivoting is a heuristic (exact subset selection is NP-complete), so no
/// optimality is claimed; in practice it tracks the leading singular
/// subspace closely.
pub fn select_paths(g: &RoutingMatrix, cov: &CovarianceModel, k: usize) -> Result<PathSelection> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let gc = weighted_matrix(g, cov)?;
    let svd = numeric::try_svd(&gc, true, false)?;
    let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = numeric::numerical_rank(&singular);
    if k > rank {
        return Err(Error::KTooLarge { k, rank });
    }
    // Squared singular values are the eigenvalues of (GC)ᵀ(GC); zero-pad to
    // the link count when there are fewer paths than links.
    let mut eigenvalues: Vec<f64> = singular.iter().map(|s| s * s).collect();
    eigenvalues.resize(gc.ncols(), 0.0);
    let source_spectrum = Spectrum {
        eigenvalues,
        source_label: "weighted routing matrix".into(),
    };

    let u = svd.u.as_ref().expect("U requested from the SVD");
    // Rows of U_(k)ᵀ are the k leading left-singular directions; columns
    // correspond to paths.
    let ukt = u.columns(0, k).transpose();
    let order = column_pivot_order(&ukt);

    let selected: Vec<usize> = order[..k].to_vec();
    let mut permutation = selected.clone();
    let mut chosen = vec![false; g.n_paths()];
    for &p in &selected {
        chosen[p] = true;
    }
    permutation.extend((0..g.n_paths()).filter(|&p| !chosen[p]));

    // The selected rows of GC must be independent, otherwise the sampled
    // covariance block is singular downstream.
    let mut ts = DMatrix::zeros(k, gc.ncols());
    for (i, &p) in selected.iter().enumerate() {
        ts.set_row(i, &gc.row(p));
    }
    let sv = numeric::try_svd(&ts, false, false)?;
    let smin = sv
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let smax = sv.singular_values.iter().copied().fold(0.0f64, f64::max);
    if !(smin > smax * RANK_REL_TOL && smax > 0.0) {
        return Err(Error::RankDeficientSample);
    }

    Ok(PathSelection {
        k,
        selected,
        permutation,
        source_spectrum,
    })
}

/// Fraction of shared paths between two selections:
/// `|a ∩ b| / min(k_a, k_b)`.
pub fn selection_overlap(a: &PathSelection, b: &PathSelection) -> f64 {
    let small: std::collections::HashSet<usize> = a.selected.iter().copied().collect();
    let shared = b.selected.iter().filter(|p| small.contains(p)).count();
    shared as f64 / a.k.min(b.k).max(1) as f64
}
