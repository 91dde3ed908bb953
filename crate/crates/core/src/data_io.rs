//! Measurement series: seeded synthetic generation, CSV ingest/emit, and
//! diagonal covariance estimation.
//!
//! The CSV grammar is deliberately tiny (no quoting, no escapes), so
//! serialization uses plain `Display` floats and round-trips bit-exactly.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::spectral::CovarianceModel;
use crate::topology::Topology;

/// Epochs per simulated day; one epoch is ten minutes.
pub const EPOCHS_PER_DAY: usize = 144;

/// Covariance estimation window default: one simulated day.
pub const DEFAULT_COVARIANCE_EPOCHS: usize = EPOCHS_PER_DAY;

/// Whether columns are links or paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Link,
    Path,
}

/// A dense epochs × width block of measurements in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    values: DMatrix<f64>,
    epoch_duration_s: f64,
    kind: SeriesKind,
}

impl MeasurementSeries {
    /// Wraps a value matrix (rows = epochs, columns = links or paths) with
    /// the default ten-minute epoch duration.
    pub fn from_matrix(values: DMatrix<f64>, kind: SeriesKind) -> Self {
        MeasurementSeries {
            values,
            epoch_duration_s: 600.0,
            kind,
        }
    }

    pub fn n_epochs(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn epoch_duration_s(&self) -> f64 {
        self.epoch_duration_s
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, epoch: usize, column: usize) -> f64 {
        self.values[(epoch, column)]
    }

    /// One epoch as a plain vector.
    pub fn epoch_values(&self, epoch: usize) -> Vec<f64> {
        self.values.row(epoch).iter().copied().collect()
    }

    /// One column's full history.
    pub fn column_values(&self, column: usize) -> Vec<f64> {
        self.values.column(column).iter().copied().collect()
    }
}

/// Parameters of the synthetic link-delay generator. Defaults mirror the
/// bundled benchmark: 432 ten-minute epochs (three days), link means spread
/// evenly over 2..36 ms, standard deviations drawn from 0.16..0.94 ms, and
/// a 24 h sinusoid on roughly 30% of links at a tenth of their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub epochs: usize,
    pub mean_range: (f64, f64),
    pub std_range: (f64, f64),
    pub diurnal_amplitude_fraction: f64,
    pub diurnal_links_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 1,
            epochs: 432,
            mean_range: (2.0, 36.0),
            std_range: (0.16, 0.94),
            diurnal_amplitude_fraction: 0.1,
            diurnal_links_fraction: 0.3,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs < 8 {
            return Err(Error::InvalidInput(format!(
                "need at least 8 epochs, got {}",
                self.epochs
            )));
        }
        let ok_range =
            |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi;
        if !ok_range(self.mean_range) {
            return Err(Error::InvalidInput(format!(
                "bad mean range {:?}",
                self.mean_range
            )));
        }
        if !ok_range(self.std_range) {
            return Err(Error::InvalidInput(format!(
                "bad std range {:?}",
                self.std_range
            )));
        }
        if !(self.diurnal_amplitude_fraction.is_finite() && self.diurnal_amplitude_fraction >= 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "bad diurnal amplitude fraction {}",
                self.diurnal_amplitude_fraction
            )));
        }
        if !(self.diurnal_links_fraction >= 0.0 && self.diurnal_links_fraction <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "bad diurnal links fraction {}",
                self.diurnal_links_fraction
            )));
        }
        Ok(())
    }
}

/// The parameters actually drawn for one synthetic run.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticGroundTruth {
    pub link_means: Vec<f64>,
    pub link_stds: Vec<f64>,
    /// Links carrying the sinusoid, ascending.
    pub diurnal_links: Vec<usize>,
    /// Phase per diurnal link, aligned with `diurnal_links`.
    pub diurnal_phases: Vec<f64>,
}

/// Seeded synthetic per-link delay series plus the parameters it was drawn
/// from. Links are independent Gaussians around an evenly spaced mean, a
/// seeded subset gets an additive 24 h sinusoid with a random phase, and
/// draws below 0.01 ms are clamped there.
///
/// The draw order is part of the determinism contract: per-link stds, then
/// the diurnal subset, then phases, then noise link by link with epochs
/// innermost. Reordering any of these changes every downstream regression
/// constant.
pub fn generate_synthetic_with_truth(
    config: &SyntheticConfig,
    topology: &Topology,
) -> Result<(MeasurementSeries, SyntheticGroundTruth)> {
    config.validate()?;
    let n_links = topology.link_count();
    let epochs = config.epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (mean_lo, mean_hi) = config.mean_range;
    let link_means: Vec<f64> = (0..n_links)
        .map(|j| {
            if n_links == 1 {
                mean_lo
            } else {
                mean_lo + (mean_hi - mean_lo) * j as f64 / (n_links - 1) as f64
            }
        })
        .collect();

    let (std_lo, std_hi) = config.std_range;
    let link_stds: Vec<f64> = (0..n_links)
        .map(|_| rng.random_range(std_lo..=std_hi))
        .collect();

    let n_diurnal =
        ((config.diurnal_links_fraction * n_links as f64).round() as usize).min(n_links);
    let mut diurnal_links = rand::seq::index::sample(&mut rng, n_links, n_diurnal).into_vec();
    diurnal_links.sort_unstable();
    let diurnal_phases: Vec<f64> = diurnal_links
        .iter()
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = DMatrix::zeros(epochs, n_links);
    let mut diurnal_of = vec![None; n_links];
    for (i, &j) in diurnal_links.iter().enumerate() {
        diurnal_of[j] = Some(diurnal_phases[i]);
    }
    for j in 0..n_links {
        let amp = config.diurnal_amplitude_fraction * link_means[j];
        for t in 0..epochs {
            let seasonal = match diurnal_of[j] {
                Some(phase) => {
                    amp * (std::f64::consts::TAU * t as f64 / EPOCHS_PER_DAY as f64 + phase).sin()
                }
                None => 0.0,
            };
            let noise = link_stds[j] * normal.sample(&mut rng);
            values[(t, j)] = (link_means[j] + seasonal + noise).max(0.01);
        }
    }

    Ok((
        MeasurementSeries::from_matrix(values, SeriesKind::Link),
        SyntheticGroundTruth {
            link_means,
            link_stds,
            diurnal_links,
            diurnal_phases,
        },
    ))
}

/// As `generate_synthetic_with_truth`, discarding the drawn parameters.
pub fn generate_synthetic(
    config: &SyntheticConfig,
    topology: &Topology,
) -> Result<MeasurementSeries> {
    generate_synthetic_with_truth(config, topology).map(|(series, _)| series)
}

/// Serializes a series to the `epoch,0,1,...` CSV format. Floats use plain
/// `Display`, whose shortest-round-trip output makes parse(serialize(x))
/// bit-exact.
pub fn series_to_csv_string(series: &MeasurementSeries) -> String {
    let mut out = String::from("epoch");
    for j in 0..series.width() {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for t in 0..series.n_epochs() {
        let _ = write!(out, "{t}");
        for j in 0..series.width() {
            let _ = write!(out, ",{}", series.value(t, j));
        }
        out.push('\n');
    }
    out
}

/// Parses the `epoch,<id>,...` link-series format. Column ids must be a
/// permutation of 0..n_links; columns are reordered into id order, so a
/// permuted file loads identically to the canonical one.
pub fn parse_link_series_str(text: &str, n_links: usize) -> Result<MeasurementSeries> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        message: "empty series file".into(),
    })?;
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if fields.first().map(|f| f.trim()) != Some("epoch") {
        return Err(Error::ParseError {
            line: 1,
            message: "first header column must be 'epoch'".into(),
        });
    }
    if fields.len() != n_links + 1 {
        return Err(Error::ColumnMismatch {
            expected: n_links,
            got: fields.len().saturating_sub(1),
        });
    }
    // column_of[id] = position of that link id in the file's field list.
    let mut column_of = vec![usize::MAX; n_links];
    for (pos, field) in fields.iter().enumerate().skip(1) {
        let id: usize = field.trim().parse().map_err(|_| Error::ParseError {
            line: 1,
            message: format!("bad link id {field:?} in header"),
        })?;
        if id >= n_links || column_of[id] != usize::MAX {
            return Err(Error::ColumnMismatch {
                expected: n_links,
                got: fields.len() - 1,
            });
        }
        column_of[id] = pos;
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_links + 1 {
            return Err(Error::ColumnMismatch {
                expected: n_links,
                got: fields.len().saturating_sub(1),
            });
        }
        let epoch: usize = fields[0].trim().parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: format!("bad epoch index {:?}", fields[0]),
        })?;
        if epoch != rows.len() {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("expected epoch {}, got {epoch}", rows.len()),
            });
        }
        let mut row = vec![0.0; n_links];
        for (id, &pos) in column_of.iter().enumerate() {
            let cell = fields[pos].trim();
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    line: line_no,
                    column: pos + 1,
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::ParseError {
                line: line_no,
                message: format!("bad value {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::ParseError {
                    line: line_no,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            row[id] = v;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::ParseError {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let epochs = rows.len();
    let values = DMatrix::from_fn(epochs, n_links, |t, j| rows[t][j]);
    Ok(MeasurementSeries::from_matrix(values, SeriesKind::Link))
}

pub fn load_link_series(path: impl AsRef<Path>, n_links: usize) -> Result<MeasurementSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_link_series_str(&text, n_links)
}

pub fn save_link_series(path: impl AsRef<Path>, series: &MeasurementSeries) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, series_to_csv_string(series))
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// Serializes a covariance model to the `link_id,variance_ms2` format.
pub fn covariance_to_csv_string(cov: &CovarianceModel) -> String {
    let mut out = String::from("link_id,variance_ms2\n");
    for (j, v) in cov.variances().iter().enumerate() {
        let _ = writeln!(out, "{j},{v}");
    }
    out
}

/// Parses the `link_id,variance_ms2` format; ids must be consecutive
/// from 0 and cover every link.
pub fn parse_covariance_str(text: &str, n_links: usize) -> Result<CovarianceModel> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        message: "empty covariance file".into(),
    })?;
    if header.trim() != "link_id,variance_ms2" {
        return Err(Error::ParseError {
            line: 1,
            message: format!(
                "expected header 'link_id,variance_ms2', got {:?}",
                header.trim()
            ),
        });
    }
    let mut variances = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::ColumnMismatch {
                expected: 2,
                got: fields.len(),
            });
        }
        let id: usize = fields[0].trim().parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: format!("bad link_id {:?}", fields[0]),
        })?;
        if id != variances.len() {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("link ids must be consecutive from 0, got {id}"),
            });
        }
        if fields[1].trim().is_empty() {
            return Err(Error::MissingValue {
                line: line_no,
                column: 2,
            });
        }
        let v: f64 = fields[1].trim().parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: format!("bad variance {:?}", fields[1]),
        })?;
        variances.push(v);
    }
    if variances.len() != n_links {
        return Err(Error::ColumnMismatch {
            expected: n_links,
            got: variances.len(),
        });
    }
    CovarianceModel::from_variances(variances)
}

pub fn load_covariance(path: impl AsRef<Path>, n_links: usize) -> Result<CovarianceModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_covariance_str(&text, n_links)
}

/// Per-link sample variances (n−1 denominator) over `epochs` of a link
/// series. Variances below 1e-6 ms² are raised to that floor with a
/// warning, keeping the resulting model positive definite.
pub fn estimate_diag_covariance(
    series: &MeasurementSeries,
    epochs: Range<usize>,
) -> Result<CovarianceModel> {
    if series.kind() != SeriesKind::Link {
        return Err(Error::InvalidInput(
            "covariance estimation needs a link series".into(),
        ));
    }
    if epochs.end > series.n_epochs() || epochs.start >= epochs.end {
        return Err(Error::RangeOutOfBounds {
            start: epochs.start,
            end: epochs.end,
            len: series.n_epochs(),
        });
    }
    let n = epochs.end - epochs.start;
    if n < 2 {
        return Err(Error::InvalidInput(
            "variance estimation needs at least 2 epochs".into(),
        ));
    }
    const FLOOR: f64 = 1e-6;
    let mut variances = Vec::with_capacity(series.width());
    let mut floored = 0usize;
    for j in 0..series.width() {
        let mean: f64 = epochs.clone().map(|t| series.value(t, j)).sum::<f64>() / n as f64;
        let ss: f64 = epochs
            .clone()
            .map(|t| {
                let d = series.value(t, j) - mean;
                d * d
            })
            .sum();
        let mut v = ss / (n - 1) as f64;
        if v < FLOOR {
            v = FLOOR;
            floored += 1;
        }
        variances.push(v);
    }
    if floored > 0 {
        log::warn!("{floored} link variance(s) at the 1e-6 ms^2 floor; link data may be constant");
    }
    CovarianceModel::from_variances(variances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use approx::assert_relative_eq;

    #[test]
    fn same_seed_is_bit_identical() {
        let t = assets::abilene();
        let config = SyntheticConfig::default();
        let a = generate_synthetic(&config, &t).unwrap();
        let b = generate_synthetic(&config, &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_epochs(), 432);
        assert_eq!(a.width(), 30);
        let c = generate_synthetic(&SyntheticConfig { seed: 43, ..config }, &t).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stationary_series_has_configured_means() {
        let t = assets::abilene();
        let config = SyntheticConfig {
            diurnal_amplitude_fraction: 0.0,
            ..SyntheticConfig::default()
        };
        let (series, truth) = generate_synthetic_with_truth(&config, &t).unwrap();
        assert_relative_eq!(truth.link_means[0], 2.0);
        assert_relative_eq!(truth.link_means[29], 36.0);
        for j in 0..30 {
            let vals = series.column_values(j);
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let se = truth.link_stds[j] / (vals.len() as f64).sqrt();
            assert!(
                (mean - truth.link_means[j]).abs() < 3.0 * se + 1e-9,
                "link {j}: sample mean {mean} vs {}",
                truth.link_means[j]
            );
            assert!(truth.link_stds[j] >= 0.16 && truth.link_stds[j] <= 0.94);
        }
        assert_eq!(truth.diurnal_links.len(), 9);
    }

    #[test]
    fn draws_clamp_at_the_delay_floor() {
        let t = assets::abilene();
        let config = SyntheticConfig {
            mean_range: (2.0, 2.0),
            std_range: (50.0, 50.0),
            ..SyntheticConfig::default()
        };
        let series = generate_synthetic(&config, &t).unwrap();
        let min = series
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, 0.01);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let t = assets::abilene();
        for config in [
            SyntheticConfig {
                epochs: 5,
                ..SyntheticConfig::default()
            },
            SyntheticConfig {
                mean_range: (-1.0, 3.0),
                ..SyntheticConfig::default()
            },
            SyntheticConfig {
                std_range: (0.9, 0.1),
                ..SyntheticConfig::default()
            },
            SyntheticConfig {
                diurnal_links_fraction: 1.5,
                ..SyntheticConfig::default()
            },
        ] {
            assert!(generate_synthetic(&config, &t).is_err());
        }
    }

    #[test]
    fn series_round_trips_bit_exactly() {
        let t = assets::abilene();
        let series = generate_synthetic(&SyntheticConfig::default(), &t).unwrap();
        let text = series_to_csv_string(&series);
        let again = parse_link_series_str(&text, 30).unwrap();
        assert_eq!(series, again);
        assert_eq!(series_to_csv_string(&again), text);
    }

    #[test]
    fn permuted_columns_load_into_id_order() {
        let text = "epoch,1,0\n0,10,20\n1,11,21\n";
        let series = parse_link_series_str(text, 2).unwrap();
        assert_eq!(series.value(0, 0), 20.0);
        assert_eq!(series.value(0, 1), 10.0);
        assert_eq!(series.value(1, 0), 21.0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(
            parse_link_series_str("epoch,0\n", 2),
            Err(Error::ColumnMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            parse_link_series_str("epoch,0,1\n", 2),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            parse_link_series_str("epoch,0,1\n0,1.0,\n", 2),
            Err(Error::MissingValue { line: 2, column: 3 })
        ));
        assert!(matches!(
            parse_link_series_str("epoch,0,1\n0,1.0,x\n", 2),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            parse_link_series_str("epoch,0,1\n5,1.0,2.0\n", 2),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(
            parse_link_series_str("time,0,1\n0,1.0,2.0\n", 2),
            Err(Error::ParseError { line: 1, .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let t = assets::abilene();
        let series = generate_synthetic(&SyntheticConfig::default(), &t).unwrap();
        let path = std::env::temp_dir().join(format!("series-{}.csv", std::process::id()));
        save_link_series(&path, &series).unwrap();
        let again = load_link_series(&path, 30).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(series, again);
    }

    #[test]
    fn covariance_estimation_matches_hand_values() {
        // Two epochs [0, 2] per link: sample variance 2 with the n-1 rule.
        let values = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        let series = MeasurementSeries::from_matrix(values, SeriesKind::Link);
        let cov = estimate_diag_covariance(&series, 0..2).unwrap();
        for &v in cov.variances() {
            assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_series_hits_the_variance_floor() {
        let values = DMatrix::from_element(10, 2, 7.0);
        let series = MeasurementSeries::from_matrix(values, SeriesKind::Link);
        let cov = estimate_diag_covariance(&series, 0..10).unwrap();
        assert_eq!(cov.variances(), &[1e-6, 1e-6]);
    }

    #[test]
    fn estimation_range_is_validated() {
        let values = DMatrix::from_element(10, 2, 7.0);
        let series = MeasurementSeries::from_matrix(values, SeriesKind::Link);
        assert!(matches!(
            estimate_diag_covariance(&series, 0..11),
            Err(Error::RangeOutOfBounds {
                end: 11,
                len: 10,
                ..
            })
        ));
        assert!(estimate_diag_covariance(&series, 3..4).is_err());
        let path_series =
            MeasurementSeries::from_matrix(DMatrix::from_element(10, 2, 7.0), SeriesKind::Path);
        assert!(estimate_diag_covariance(&path_series, 0..10).is_err());
    }

    #[test]
    fn estimated_variances_track_the_generator() {
        let t = assets::abilene();
        let (series, truth) = generate_synthetic_with_truth(
            &SyntheticConfig {
                diurnal_amplitude_fraction: 0.0,
                ..SyntheticConfig::default()
            },
            &t,
        )
        .unwrap();
        let cov = estimate_diag_covariance(&series, 0..series.n_epochs()).unwrap();
        for j in 0..30 {
            let sigma2 = truth.link_stds[j] * truth.link_stds[j];
            // Var of a sample variance of n Gaussians ~ 2 sigma^4 / (n-1).
            let se = (2.0 / 431.0_f64).sqrt() * sigma2;
            assert!(
                (cov.variances()[j] - sigma2).abs() < 4.0 * se,
                "link {j}: {} vs {}",
                cov.variances()[j],
                sigma2
            );
        }
    }

    #[test]
    fn covariance_csv_round_trips() {
        let cov = assets::abilene_reference_covariance();
        let text = covariance_to_csv_string(&cov);
        let again = parse_covariance_str(&text, 30).unwrap();
        assert_eq!(cov, again);
        assert!(parse_covariance_str("link_id,variance_ms2\n0,-1.0\n", 1).is_err());
        assert!(matches!(
            parse_covariance_str("link_id,variance_ms2\n0,1.0\n", 2),
            Err(Error::ColumnMismatch {
                expected: 2,
                got: 1
            })
        ));
    }
}
