//! Applications built on the selection + prediction machinery: accuracy
//! curves over k, spike detection with ROC sweeps, two-subnetwork
//! comparison, and link-deletion robustness of the spectral structure.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::data_io::{MeasurementSeries, SeriesKind};
use crate::error::{Error, Result};
use crate::predictor::{partition_moments, LinearFunctional, PredictorModel};
use crate::selection::select_paths;
use crate::spectral::{
    eigenspectrum, eigenvector_energy, scale_to_unit_max, weighted_matrix, CovarianceModel,
    EigenvectorEnergy, Spectrum,
};
use crate::topology::{build_routing_matrix, delete_links, RoutingMatrix, Topology};

/// Rolling-baseline length for spike detection: one hour of ten-minute
/// epochs.
pub const DEFAULT_SPIKE_WINDOW: usize = 6;

/// Smoothing constant used for the subnetwork difference series.
pub const DEFAULT_SMOOTHING_ALPHA: f64 = 0.1;

/// Mean relative prediction error for one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct KError {
    pub k: usize,
    pub mean_rel_error: f64,
}

/// For each k, selects paths, predicts the functional at every epoch from
/// the sampled entries of `y = G x_t`, and averages `|pred − actual| /
/// |actual|` over epochs (epochs with an exactly zero actual are skipped).
/// No calibration is applied; this measures the raw predictor.
pub fn error_curve(
    series: &MeasurementSeries,
    g: &RoutingMatrix,
    cov: &CovarianceModel,
    l: &LinearFunctional,
    ks: &[usize],
) -> Result<Vec<KError>> {
    if series.kind() != SeriesKind::Link {
        return Err(Error::InvalidInput(
            "error curve needs a link series".into(),
        ));
    }
    if series.width() != g.n_links() {
        return Err(Error::DimensionMismatch {
            context: "series link count",
            expected: g.n_links(),
            got: series.width(),
        });
    }
    if l.len() != g.n_paths() {
        return Err(Error::DimensionMismatch {
            context: "functional weights",
            expected: g.n_paths(),
            got: l.len(),
        });
    }
    let mut out: Vec<KError> = ks
        .par_iter()
        .map(|&k| -> Result<KError> {
            let sel = select_paths(g, cov, k)?;
            let part = partition_moments(g, cov, &sel)?;
            let model = PredictorModel::new(part, l.clone())?;
            let mut total = 0.0;
            let mut count = 0usize;
            for t in 0..series.n_epochs() {
                let x = series.epoch_values(t);
                let y_s = model.sample_values(&x)?;
                let predicted = model.predict(&y_s)?;
                let actual = model.true_value(&x)?;
                if actual != 0.0 {
                    total += (predicted - actual).abs() / actual.abs();
                    count += 1;
                }
            }
            let mean_rel_error = if count > 0 {
                total / count as f64
            } else {
                f64::NAN
            };
            Ok(KError { k, mean_rel_error })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|e| e.k);
    Ok(out)
}

/// One upward spike relative to its rolling baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyEvent {
    pub epoch: usize,
    pub value: f64,
    pub baseline_mean: f64,
    /// Sample std of the baseline window, floored at 1e-9 ms.
    pub baseline_std: f64,
    pub excess_sigmas: f64,
}

/// Flags epoch t when `value_t − mean(previous window)` exceeds
/// `threshold_sigmas` times the window's sample standard deviation.
/// One-sided: only increases count. The std is floored at 1e-9 ms so a
/// constant baseline still admits a genuine jump.
pub fn detect_spikes(
    series: &[f64],
    window: usize,
    threshold_sigmas: f64,
) -> Result<Vec<AnomalyEvent>> {
    if window < 2 {
        return Err(Error::InvalidInput(format!(
            "spike window must be at least 2, got {window}"
        )));
    }
    if series.len() <= window {
        return Err(Error::WindowTooLarge {
            window,
            len: series.len(),
        });
    }
    if !(threshold_sigmas.is_finite() && threshold_sigmas > 0.0) {
        return Err(Error::InvalidInput(format!(
            "threshold must be positive, got {threshold_sigmas}"
        )));
    }
    const STD_FLOOR: f64 = 1e-9;
    let mut events = Vec::new();
    for t in window..series.len() {
        let base = &series[t - window..t];
        let mean: f64 = base.iter().sum::<f64>() / window as f64;
        let ss: f64 = base.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = (ss / (window - 1) as f64).sqrt().max(STD_FLOOR);
        let value = series[t];
        if value - mean > threshold_sigmas * std {
            events.push(AnomalyEvent {
                epoch: t,
                value,
                baseline_mean: mean,
                baseline_std: std,
                excess_sigmas: (value - mean) / std,
            });
        }
    }
    Ok(events)
}

/// One operating point of a detection threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub threshold_sigmas: f64,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
}

/// Thresholds 1.0 to 5.0 in steps of 0.25.
pub fn default_threshold_sweep() -> Vec<f64> {
    (4..=20).map(|i| i as f64 * 0.25).collect()
}

/// Sweeps detection thresholds on the predicted series against ground
/// truth defined by the actual series at `actual_sigmas`. TPR is the hit
/// fraction of true events; FPR counts false alarms against the eligible
/// epochs that are not true events.
pub fn roc_sweep(
    actual: &[f64],
    predicted: &[f64],
    window: usize,
    actual_sigmas: f64,
    sweep: &[f64],
) -> Result<Vec<RocPoint>> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "predicted series length",
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    let truth: BTreeSet<usize> = detect_spikes(actual, window, actual_sigmas)?
        .into_iter()
        .map(|e| e.epoch)
        .collect();
    if truth.is_empty() {
        return Err(Error::EmptyTruth {
            sigmas: actual_sigmas,
        });
    }
    let eligible = actual.len() - window;
    let negatives = eligible - truth.len();
    let mut points = Vec::with_capacity(sweep.len());
    for &threshold in sweep {
        let flagged: BTreeSet<usize> = detect_spikes(predicted, window, threshold)?
            .into_iter()
            .map(|e| e.epoch)
            .collect();
        let tp = flagged.intersection(&truth).count();
        let fp = flagged.difference(&truth).count();
        points.push(RocPoint {
            threshold_sigmas: threshold,
            true_positive_rate: tp as f64 / truth.len() as f64,
            false_positive_rate: if negatives > 0 {
                fp as f64 / negatives as f64
            } else {
                0.0
            },
        });
    }
    Ok(points)
}

/// Exponential smoothing: `s_0 = v_0`, `s_t = alpha·v_t + (1−alpha)·s_{t−1}`.
pub fn exp_smooth(series: &[f64], alpha: f64) -> Vec<f64> {
    assert!(
        alpha > 0.0 && alpha <= 1.0,
        "smoothing constant must be in (0, 1], got {alpha}"
    );
    let mut out = Vec::with_capacity(series.len());
    let mut state = 0.0;
    for (t, &v) in series.iter().enumerate() {
        state = if t == 0 {
            v
        } else {
            alpha * v + (1.0 - alpha) * state
        };
        out.push(state);
    }
    out
}

/// Result of monitoring the delay difference between two nodes' outgoing
/// paths from k sampled paths.
#[derive(Debug, Clone)]
pub struct SubnetComparison {
    pub group1: String,
    pub group2: String,
    pub k: usize,
    /// Path ids (in the full universe) the restricted matrix was built
    /// from: all paths originating at either node, ascending.
    pub path_universe: Vec<usize>,
    /// The k sampled paths, as full-universe path ids, in pivot order.
    pub selected_paths: Vec<usize>,
    pub bias_offset: f64,
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
    pub predicted_smoothed: Vec<f64>,
    pub actual_smoothed: Vec<f64>,
    /// Fraction of epochs where predicted and actual difference share a
    /// sign, excluding epochs with an exactly zero actual.
    pub sign_agreement: f64,
    pub sign_agreement_smoothed: f64,
    /// Pearson correlation between raw predicted and actual differences.
    pub correlation: f64,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn sign_agreement_rate(predicted: &[f64], actual: &[f64]) -> f64 {
    let mut agree = 0usize;
    let mut counted = 0usize;
    for (&p, &a) in predicted.iter().zip(actual) {
        if a == 0.0 {
            continue;
        }
        counted += 1;
        if sign(p) == sign(a) {
            agree += 1;
        }
    }
    if counted == 0 {
        f64::NAN
    } else {
        agree as f64 / counted as f64
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Monitors the mean-delay difference between paths leaving `node1` and
/// paths leaving `node2`, sampling only k paths from those two groups.
///
/// The routing matrix is restricted to the two origin groups, the
/// difference functional is built over that universe, selection runs on the
/// restricted weighted matrix, and the predictor is calibrated once against
/// the first epoch. Swapping the nodes negates the predicted and actual
/// series exactly.
pub fn compare_subnets(
    g: &RoutingMatrix,
    cov: &CovarianceModel,
    series: &MeasurementSeries,
    node1: &str,
    node2: &str,
    k: usize,
) -> Result<SubnetComparison> {
    if node1 == node2 {
        return Err(Error::InvalidInput(
            "subnetwork comparison needs two distinct nodes".into(),
        ));
    }
    if series.kind() != SeriesKind::Link {
        return Err(Error::InvalidInput(
            "subnet comparison needs a link series".into(),
        ));
    }
    if series.width() != g.n_links() {
        return Err(Error::DimensionMismatch {
            context: "series link count",
            expected: g.n_links(),
            got: series.width(),
        });
    }
    for node in [node1, node2] {
        if !g.node_names().iter().any(|n| n == node) {
            return Err(Error::InvalidInput(format!("unknown node {node:?}")));
        }
    }
    let rows1 = g.origin_paths(node1);
    let rows2 = g.origin_paths(node2);
    if rows1.is_empty() || rows2.is_empty() {
        return Err(Error::InvalidInput(
            "both nodes must originate at least one path".into(),
        ));
    }
    let mut path_universe: Vec<usize> = rows1.iter().chain(rows2.iter()).copied().collect();
    path_universe.sort_unstable();
    let restricted = g.restrict(&path_universe)?;

    let local = |ids: &[usize]| -> Vec<usize> {
        ids.iter()
            .map(|id| path_universe.binary_search(id).expect("id in universe"))
            .collect()
    };
    let functional =
        LinearFunctional::group_difference(path_universe.len(), &local(&rows1), &local(&rows2))?;

    let sel = select_paths(&restricted, cov, k)?;
    let part = partition_moments(&restricted, cov, &sel)?;
    let model = PredictorModel::new(part, functional)?.calibrated(&series.epoch_values(0))?;

    let mut predicted = Vec::with_capacity(series.n_epochs());
    let mut actual = Vec::with_capacity(series.n_epochs());
    for t in 0..series.n_epochs() {
        let x = series.epoch_values(t);
        let y_s = model.sample_values(&x)?;
        predicted.push(model.predict(&y_s)?);
        actual.push(model.true_value(&x)?);
    }
    let predicted_smoothed = exp_smooth(&predicted, DEFAULT_SMOOTHING_ALPHA);
    let actual_smoothed = exp_smooth(&actual, DEFAULT_SMOOTHING_ALPHA);

    Ok(SubnetComparison {
        group1: node1.to_string(),
        group2: node2.to_string(),
        k,
        selected_paths: sel.selected.iter().map(|&i| path_universe[i]).collect(),
        bias_offset: model.bias_offset(),
        sign_agreement: sign_agreement_rate(&predicted, &actual),
        sign_agreement_smoothed: sign_agreement_rate(&predicted_smoothed, &actual_smoothed),
        correlation: pearson(&predicted, &actual),
        path_universe,
        predicted,
        actual,
        predicted_smoothed,
        actual_smoothed,
    })
}

/// Outcome for one deletion set in a robustness sweep.
#[derive(Debug, Clone)]
pub struct VariantOutcome {
    /// Deleted link ids (original numbering), ascending.
    pub deleted: Vec<usize>,
    /// Surviving link ids (original numbering), ascending; positions match
    /// the renumbered links of the variant.
    pub kept_links: Vec<usize>,
    pub connected: bool,
    /// Max-scaled spectrum of the variant's weighted matrix; None when the
    /// variant is disconnected.
    pub scaled_spectrum: Option<Spectrum>,
    /// First-eigenvector energy over the variant's links; indexes align
    /// with `kept_links`. None when disconnected.
    pub first_energy: Option<EigenvectorEnergy>,
}

/// A full deletion sweep, with the intact network's spectrum and energy as
/// the reference.
#[derive(Debug, Clone)]
pub struct RobustnessSweep {
    pub depth: usize,
    pub intact_scaled_spectrum: Spectrum,
    pub intact_first_energy: EigenvectorEnergy,
    pub variants: Vec<VariantOutcome>,
}

impl RobustnessSweep {
    pub fn disconnected_count(&self) -> usize {
        self.variants.iter().filter(|v| !v.connected).count()
    }
}

/// Deletes every link set of the given size (1 or 2) and recomputes routing
/// and spectral structure for each surviving variant. Disconnected variants
/// are recorded with `connected = false`, never dropped, so their count is
/// auditable. Surviving links keep their variances from the intact model.
pub fn robustness_sweep(
    topology: &Topology,
    cov: &CovarianceModel,
    depth: usize,
) -> Result<RobustnessSweep> {
    if !(depth == 1 || depth == 2) {
        return Err(Error::InvalidInput(format!(
            "sweep depth must be 1 or 2, got {depth}"
        )));
    }
    let n_links = topology.link_count();
    if cov.n_links() != n_links {
        return Err(Error::DimensionMismatch {
            context: "covariance link count",
            expected: n_links,
            got: cov.n_links(),
        });
    }

    let g = build_routing_matrix(topology)?;
    let gc = weighted_matrix(&g, cov)?;
    let intact_scaled_spectrum = scale_to_unit_max(&eigenspectrum(&gc, "intact")?)?;
    let intact_first_energy = eigenvector_energy(&gc, 0)?;

    let mut sets: Vec<Vec<usize>> = Vec::new();
    if depth == 1 {
        sets.extend((0..n_links).map(|i| vec![i]));
    } else {
        for i in 0..n_links {
            for j in (i + 1)..n_links {
                sets.push(vec![i, j]);
            }
        }
    }

    let mut variants: Vec<VariantOutcome> = sets
        .into_par_iter()
        .map(|deleted| -> Result<VariantOutcome> {
            let kept_links: Vec<usize> = (0..n_links).filter(|i| !deleted.contains(i)).collect();
            let variant = delete_links(topology, &deleted)?;
            if !variant.is_strongly_connected() {
                return Ok(VariantOutcome {
                    deleted,
                    kept_links,
                    connected: false,
                    scaled_spectrum: None,
                    first_energy: None,
                });
            }
            let vcov = cov.restrict(&kept_links)?;
            let vg = build_routing_matrix(&variant)?;
            let vgc = weighted_matrix(&vg, &vcov)?;
            let spectrum = eigenspectrum(&vgc, variant.name())?;
            Ok(VariantOutcome {
                deleted,
                kept_links,
                connected: true,
                scaled_spectrum: Some(scale_to_unit_max(&spectrum)?),
                first_energy: Some(eigenvector_energy(&vgc, 0)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    variants.sort_by(|a, b| a.deleted.cmp(&b.deleted));

    Ok(RobustnessSweep {
        depth,
        intact_scaled_spectrum,
        intact_first_energy,
        variants,
    })
}
