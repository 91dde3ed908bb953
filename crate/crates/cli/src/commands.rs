//! Subcommand implementations. Each writes its CSV outputs plus a
//! `manifest.json` into the requested directory and prints a short
//! summary to stdout; all randomness flows through the seed recorded in
//! the manifest.

use std::path::Path;

use pathmon::analytics::DEFAULT_SPIKE_WINDOW;
use pathmon::data_io::{SeriesKind, SyntheticConfig};
use pathmon::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::emit;
use crate::inputs::{self, CovSource, TopologySource};
use crate::manifest::RunManifest;

/// Stream separator so anomaly placement never shares draws with the
/// series generator run from the same seed.
const INJECT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Adds one-epoch delay surges to a copy of the series: `count` distinct
/// epochs (all late enough to have a full detection baseline), one
/// magnitude per event drawn from `magnitude` ms, added to a random
/// half of the links. Returns the modified series and the event epochs,
/// ascending.
pub fn inject_anomalies(
    series: &MeasurementSeries,
    seed: u64,
    count: usize,
    magnitude: (f64, f64),
) -> Result<(MeasurementSeries, Vec<usize>)> {
    if !(magnitude.0.is_finite() && magnitude.0 > 0.0 && magnitude.0 <= magnitude.1) {
        return Err(Error::InvalidInput(format!(
            "bad magnitude range {magnitude:?}"
        )));
    }
    let window = DEFAULT_SPIKE_WINDOW;
    if series.n_epochs() < window + count {
        return Err(Error::InvalidInput(format!(
            "cannot place {count} events in {} epochs with a {window}-epoch baseline",
            series.n_epochs()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INJECT_STREAM);
    let mut values = series.values().clone();
    let n_links = series.width();
    let eligible = series.n_epochs() - window;
    let mut epochs: Vec<usize> = rand::seq::index::sample(&mut rng, eligible, count)
        .into_vec()
        .into_iter()
        .map(|i| i + window)
        .collect();
    epochs.sort_unstable();
    for &t in &epochs {
        let m = rng.random_range(magnitude.0..=magnitude.1);
        for j in 0..n_links {
            if rng.random_range(0.0..1.0) < 0.5 {
                values[(t, j)] += m;
            }
        }
    }
    Ok((
        MeasurementSeries::from_matrix(values, SeriesKind::Link),
        epochs,
    ))
}

fn prediction_rows(
    model: &PredictorModel,
    series: &MeasurementSeries,
) -> Result<Vec<(usize, f64, f64)>> {
    (0..series.n_epochs())
        .map(|t| {
            let x = series.epoch_values(t);
            let y_s = model.sample_values(&x)?;
            Ok((t, model.predict(&y_s)?, model.true_value(&x)?))
        })
        .collect()
}

fn load_inputs(
    topology_arg: &str,
    cov_arg: &str,
) -> Result<(
    Topology,
    RoutingMatrix,
    CovarianceModel,
    Vec<(String, String)>,
)> {
    let (t, label, text) = TopologySource::parse(topology_arg).load()?;
    let g = build_routing_matrix(&t)?;
    let (cov, cov_hashes) = CovSource::parse(cov_arg)?.resolve(t.link_count())?;
    let mut hashes = vec![(label, text)];
    hashes.extend(cov_hashes);
    Ok((t, g, cov, hashes))
}

fn spectrum_files(
    t: &Topology,
    g: &RoutingMatrix,
    cov: &CovarianceModel,
    out: &Path,
) -> Result<(Spectrum, Spectrum)> {
    let identity = CovarianceModel::identity(t.link_count());
    let gi = weighted_matrix(g, &identity)?;
    let gc = weighted_matrix(g, cov)?;
    let spec_i = eigenspectrum(&gi, "identity")?;
    let spec_w = eigenspectrum(&gc, "weighted")?;
    emit::write_file(
        &out.join("spectrum_identity.csv"),
        &emit::spectrum_csv(&spec_i),
    )?;
    emit::write_file(
        &out.join("spectrum_weighted.csv"),
        &emit::spectrum_csv(&spec_w),
    )?;
    let ids: Vec<usize> = (0..t.link_count()).collect();
    for (which, name) in [(0usize, "energy_first.csv"), (1, "energy_second.csv")] {
        let e = eigenvector_energy(&gc, which)?;
        emit::write_file(&out.join(name), &emit::energy_csv(t, &ids, &e.energy))?;
    }
    Ok((spec_i, spec_w))
}

pub fn cmd_spectrum(topology_arg: &str, cov_arg: &str, out: &Path) -> Result<()> {
    let (t, g, cov, hashes) = load_inputs(topology_arg, cov_arg)?;
    let (spec_i, spec_w) = spectrum_files(&t, &g, &cov, out)?;
    let mut m = RunManifest::new("spectrum", 0);
    m.param("topology", topology_arg).param("cov", cov_arg);
    for (label, text) in &hashes {
        m.input(label, text.as_bytes());
    }
    m.write(out)?;
    println!(
        "spectrum: rank {} of {} links, effective rank {} (identity) vs {} (weighted)",
        spec_i.rank(),
        t.link_count(),
        effective_rank(&spec_i, 0.95)?,
        effective_rank(&spec_w, 0.95)?
    );
    Ok(())
}

pub fn cmd_select(topology_arg: &str, cov_arg: &str, k_arg: &str, out: &Path) -> Result<()> {
    let (_t, g, cov, hashes) = load_inputs(topology_arg, cov_arg)?;
    let k = inputs::resolve_k(inputs::parse_k(k_arg)?, &g, &cov)?;
    let sel = select_paths(&g, &cov, k)?;
    emit::write_file(&out.join("selection.csv"), &emit::selection_csv(&g, &sel))?;
    let mut m = RunManifest::new("select", 0);
    m.param("topology", topology_arg)
        .param("cov", cov_arg)
        .param("k", k_arg)
        .param("k_resolved", k);
    for (label, text) in &hashes {
        m.input(label, text.as_bytes());
    }
    m.write(out)?;
    println!(
        "select: k={} of {} paths -> {:?}",
        sel.k,
        g.n_paths(),
        sel.selected
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_predict(
    topology_arg: &str,
    cov_arg: &str,
    series_path: &Path,
    k_arg: &str,
    functional_arg: &str,
    calibrate: bool,
    out: &Path,
) -> Result<()> {
    let (t, g, cov, mut hashes) = load_inputs(topology_arg, cov_arg)?;
    let series_text = inputs::read_file(series_path)?;
    let series = data_io::parse_link_series_str(&series_text, t.link_count())?;
    hashes.push((series_path.display().to_string(), series_text));

    let k = inputs::resolve_k(inputs::parse_k(k_arg)?, &g, &cov)?;
    let l = inputs::parse_functional(functional_arg, &g)?;
    let sel = select_paths(&g, &cov, k)?;
    let part = partition_moments(&g, &cov, &sel)?;
    let mut model = PredictorModel::new(part, l)?;
    if calibrate {
        model = model.calibrated(&series.epoch_values(0))?;
    }
    let rows = prediction_rows(&model, &series)?;
    emit::write_file(&out.join("predictions.csv"), &emit::predictions_csv(&rows))?;

    let mut m = RunManifest::new("predict", 0);
    m.param("topology", topology_arg)
        .param("cov", cov_arg)
        .param("series", series_path.display().to_string())
        .param("k", k_arg)
        .param("k_resolved", k)
        .param("functional", functional_arg)
        .param("calibrate", calibrate);
    for (label, text) in &hashes {
        m.input(label, text.as_bytes());
    }
    m.write(out)?;

    let mean_rel = rows
        .iter()
        .map(|&(_, p, a)| (p - a).abs() / a.abs())
        .sum::<f64>()
        / rows.len() as f64;
    println!(
        "predict: k={k} over {} epochs, mean relative error {mean_rel:.6}, bias offset {}",
        rows.len(),
        model.bias_offset()
    );
    Ok(())
}

pub fn cmd_detect(input: &Path, window: usize, sigmas: f64, roc: bool, out: &Path) -> Result<()> {
    let text = inputs::read_file(input)?;
    let rows = emit::parse_predictions(&text)?;
    let predicted: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let actual: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let events = detect_spikes(&predicted, window, sigmas)?;
    emit::write_file(&out.join("spikes.csv"), &emit::spikes_csv(&events))?;
    if roc {
        let points = roc_sweep(
            &actual,
            &predicted,
            window,
            sigmas,
            &default_threshold_sweep(),
        )?;
        emit::write_file(&out.join("roc.csv"), &emit::roc_csv(&points))?;
    }

    let mut m = RunManifest::new("detect", 0);
    m.param("input", input.display().to_string())
        .param("window", window)
        .param("sigmas", sigmas)
        .param("roc", roc);
    m.input(input.display().to_string(), text.as_bytes());
    m.write(out)?;
    println!(
        "detect: {} spikes above {sigmas} sigmas in {} epochs{}",
        events.len(),
        rows.len(),
        if roc { ", ROC written" } else { "" }
    );
    Ok(())
}

pub fn cmd_robustness(topology_arg: &str, cov_arg: &str, depth: usize, out: &Path) -> Result<()> {
    let (t, _g, cov, hashes) = load_inputs(topology_arg, cov_arg)?;
    let sweep = robustness_sweep(&t, &cov, depth)?;
    emit::write_file(
        &out.join("robustness_intact_spectrum.csv"),
        &emit::spectrum_csv(&sweep.intact_scaled_spectrum),
    )?;
    let ids: Vec<usize> = (0..t.link_count()).collect();
    emit::write_file(
        &out.join("robustness_intact_energy.csv"),
        &emit::energy_csv(&t, &ids, &sweep.intact_first_energy.energy),
    )?;
    emit::write_file(
        &out.join("robustness_variants.csv"),
        &emit::variants_csv(&sweep),
    )?;
    let mut m = RunManifest::new("robustness", 0);
    m.param("topology", topology_arg)
        .param("cov", cov_arg)
        .param("depth", depth);
    for (label, text) in &hashes {
        m.input(label, text.as_bytes());
    }
    m.write(out)?;
    println!(
        "robustness: depth {depth}, {} variants, {} disconnected",
        sweep.variants.len(),
        sweep.disconnected_count()
    );
    Ok(())
}

pub fn cmd_synth(topology_arg: &str, seed: u64, epochs: usize, out: &Path) -> Result<()> {
    let (t, label, text) = TopologySource::parse(topology_arg).load()?;
    let config = SyntheticConfig {
        seed,
        epochs,
        ..SyntheticConfig::default()
    };
    let series = generate_synthetic(&config, &t)?;
    emit::write_file(
        &out.join("series.csv"),
        &data_io::series_to_csv_string(&series),
    )?;
    let mut m = RunManifest::new("synth", seed);
    m.param("topology", topology_arg)
        .param("epochs", epochs)
        .param("seed", seed);
    m.input(label, text.as_bytes());
    m.write(out)?;
    println!(
        "synth: {} epochs x {} links written",
        series.n_epochs(),
        series.width()
    );
    Ok(())
}

/// One seeded end-to-end run on the bundled network: synthetic series,
/// spectra, selection, calibrated prediction, anomaly benchmark, subnet
/// comparison, and both failure sweeps, all in one directory. Identical
/// seeds give byte-identical directories.
pub fn cmd_reproduce(seed: u64, out: &Path) -> Result<()> {
    let t = assets::abilene();
    let g = build_routing_matrix(&t)?;

    let config = SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    };
    let series = generate_synthetic(&config, &t)?;
    emit::write_file(
        &out.join("series.csv"),
        &data_io::series_to_csv_string(&series),
    )?;
    println!(
        "reproduce: synthetic series {} epochs x {} links (seed {seed})",
        series.n_epochs(),
        series.width()
    );

    let end = data_io::DEFAULT_COVARIANCE_EPOCHS.min(series.n_epochs());
    let est = data_io::estimate_diag_covariance(&series, 0..end)?;
    emit::write_file(
        &out.join("covariance.csv"),
        &data_io::covariance_to_csv_string(&est),
    )?;

    let (spec_i, spec_w) = spectrum_files(&t, &g, &est, out)?;
    println!(
        "reproduce: spectra written, effective rank {} (identity) vs {} (estimated)",
        effective_rank(&spec_i, 0.95)?,
        effective_rank(&spec_w, 0.95)?
    );

    let k_auto = effective_rank(&spec_w, 0.95)?;
    let sel = select_paths(&g, &est, k_auto)?;
    emit::write_file(&out.join("selection.csv"), &emit::selection_csv(&g, &sel))?;
    println!("reproduce: selected {k_auto} paths: {:?}", sel.selected);

    let l = LinearFunctional::network_average(g.n_paths())?;
    let k_predict = 3;
    let part = partition_moments(&g, &est, &select_paths(&g, &est, k_predict)?)?;
    let model = PredictorModel::new(part, l.clone())?.calibrated(&series.epoch_values(0))?;
    let rows = prediction_rows(&model, &series)?;
    emit::write_file(&out.join("predictions.csv"), &emit::predictions_csv(&rows))?;
    let mean_rel = rows
        .iter()
        .map(|&(_, p, a)| (p - a).abs() / a.abs())
        .sum::<f64>()
        / rows.len() as f64;
    println!("reproduce: k={k_predict} calibrated prediction, mean relative error {mean_rel:.6}");

    let n_events = 12;
    let (spiked, injected) = inject_anomalies(&series, seed, n_events, (2.0, 6.0))?;
    emit::write_file(
        &out.join("injected_epochs.csv"),
        &emit::events_csv(&injected),
    )?;
    let est_spiked = data_io::estimate_diag_covariance(&spiked, 0..end)?;
    let k_detect = 9;
    let part9 = partition_moments(&g, &est_spiked, &select_paths(&g, &est_spiked, k_detect)?)?;
    let model9 = PredictorModel::new(part9, l)?.calibrated(&spiked.epoch_values(0))?;
    let spiked_rows = prediction_rows(&model9, &spiked)?;
    let predicted: Vec<f64> = spiked_rows.iter().map(|r| r.1).collect();
    let actual: Vec<f64> = spiked_rows.iter().map(|r| r.2).collect();
    let window = DEFAULT_SPIKE_WINDOW;
    let spikes = detect_spikes(&predicted, window, 3.0)?;
    emit::write_file(&out.join("spikes.csv"), &emit::spikes_csv(&spikes))?;
    let truth = detect_spikes(&actual, window, 3.0)?;
    emit::write_file(&out.join("truth_events.csv"), &emit::spikes_csv(&truth))?;
    let points = roc_sweep(&actual, &predicted, window, 3.0, &default_threshold_sweep())?;
    emit::write_file(&out.join("roc.csv"), &emit::roc_csv(&points))?;
    println!(
        "reproduce: {} injected events, {} truth events, {} spikes flagged from k={k_detect} predictions",
        injected.len(),
        truth.len(),
        spikes.len()
    );

    let (node1, node2, k_subnet) = ("Chicago", "Atlanta", 5);
    let cmp = compare_subnets(&g, &est, &series, node1, node2, k_subnet)?;
    emit::write_file(&out.join("subnet.csv"), &emit::subnet_csv(&cmp))?;
    println!(
        "reproduce: {node1} vs {node2} sign agreement {:.4} (smoothed {:.4}), correlation {:.4}",
        cmp.sign_agreement, cmp.sign_agreement_smoothed, cmp.correlation
    );

    for depth in [1usize, 2] {
        let sweep = robustness_sweep(&t, &est, depth)?;
        if depth == 1 {
            emit::write_file(
                &out.join("robustness_intact_spectrum.csv"),
                &emit::spectrum_csv(&sweep.intact_scaled_spectrum),
            )?;
            let ids: Vec<usize> = (0..t.link_count()).collect();
            emit::write_file(
                &out.join("robustness_intact_energy.csv"),
                &emit::energy_csv(&t, &ids, &sweep.intact_first_energy.energy),
            )?;
        }
        emit::write_file(
            &out.join(format!("robustness_depth{depth}_variants.csv")),
            &emit::variants_csv(&sweep),
        )?;
        println!(
            "reproduce: depth-{depth} sweep, {} variants, {} disconnected",
            sweep.variants.len(),
            sweep.disconnected_count()
        );
    }

    let mut m = RunManifest::new("reproduce", seed);
    m.param("seed", seed)
        .param("epochs", config.epochs)
        .param("k_select", "auto")
        .param("k_predict", k_predict)
        .param("k_detect", k_detect)
        .param("k_subnet", k_subnet)
        .param("subnet_nodes", format!("{node1},{node2}"))
        .param("anomaly_events", n_events)
        .param("anomaly_magnitude_ms", "2..6")
        .param("window", window)
        .param("sigmas", 3.0);
    m.input(
        "topology:abilene",
        assets::abilene_topology_csv().as_bytes(),
    );
    m.write(out)?;
    log::debug!("reproduce outputs written to {}", out.display());
    Ok(())
}
