//! Plot-ready CSV emitters. Floats print with Rust's shortest
//! round-trip formatting, so equal values always produce equal bytes and
//! a repeated run diffs clean.

use std::fs;
use std::path::Path;

use pathmon::analytics::{AnomalyEvent, RobustnessSweep, RocPoint, SubnetComparison};
use pathmon::*;

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, content).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// `index,eigenvalue,scaled_eigenvalue`, index 1-based, largest first.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("index,eigenvalue,scaled_eigenvalue\n");
    let top = spec.eigenvalues.first().copied().unwrap_or(0.0);
    for (i, &v) in spec.eigenvalues.iter().enumerate() {
        let scaled = if top > 0.0 { v / top } else { 0.0 };
        out.push_str(&format!("{},{v},{scaled}\n", i + 1));
    }
    out
}

/// `link_id,source,target,energy` for one eigenvector. `link_ids` maps
/// energy positions to original link ids; pass identity for the intact
/// network.
pub fn energy_csv(t: &Topology, link_ids: &[usize], energy: &[f64]) -> String {
    let nodes = t.nodes();
    let mut out = String::from("link_id,source,target,energy\n");
    for (pos, &e) in energy.iter().enumerate() {
        let id = link_ids[pos];
        let link = &t.links()[id];
        out.push_str(&format!(
            "{id},{},{},{e}\n",
            nodes[link.source], nodes[link.target]
        ));
    }
    out
}

/// `k,rank_position,path_id,source,destination` in pivot order, so
/// concatenating runs over several k gives a long-format sweep.
pub fn selection_csv(g: &RoutingMatrix, sel: &PathSelection) -> String {
    let mut out = String::from("k,rank_position,path_id,source,destination\n");
    for (pos, &id) in sel.selected.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{id},{},{}\n",
            sel.k,
            pos + 1,
            g.source_name(id),
            g.target_name(id)
        ));
    }
    out
}

/// `epoch,predicted,actual,relative_error`.
pub fn predictions_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("epoch,predicted,actual,relative_error\n");
    for &(epoch, p, a) in rows {
        let rel = (p - a).abs() / a.abs();
        out.push_str(&format!("{epoch},{p},{a},{rel}\n"));
    }
    out
}

/// Reads back the first three columns of a predictions CSV.
pub fn parse_predictions(text: &str) -> Result<Vec<(usize, f64, f64)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if !line.starts_with("epoch,") {
                return Err(Error::ParseError {
                    line: 1,
                    message: format!("expected epoch,... header, got {line}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(Error::ParseError {
                line: i + 1,
                message: format!("expected at least 3 columns, got {}", cols.len()),
            });
        }
        let bad = |what: &str| Error::ParseError {
            line: i + 1,
            message: format!("bad {what}"),
        };
        let epoch: usize = cols[0].trim().parse().map_err(|_| bad("epoch"))?;
        let p: f64 = cols[1].trim().parse().map_err(|_| bad("predicted"))?;
        let a: f64 = cols[2].trim().parse().map_err(|_| bad("actual"))?;
        rows.push((epoch, p, a));
    }
    if rows.is_empty() {
        return Err(Error::ParseError {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// `epoch,value,baseline_mean,baseline_std,excess_sigmas`.
pub fn spikes_csv(events: &[AnomalyEvent]) -> String {
    let mut out = String::from("epoch,value,baseline_mean,baseline_std,excess_sigmas\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.value, e.baseline_mean, e.baseline_std, e.excess_sigmas
        ));
    }
    out
}

/// `threshold_sigmas,true_positive_rate,false_positive_rate`.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold_sigmas,true_positive_rate,false_positive_rate\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.threshold_sigmas, p.true_positive_rate, p.false_positive_rate
        ));
    }
    out
}

/// `event,epoch` for injected anomaly ground truth.
pub fn events_csv(epochs: &[usize]) -> String {
    let mut out = String::from("event,epoch\n");
    for (i, &e) in epochs.iter().enumerate() {
        out.push_str(&format!("{},{e}\n", i + 1));
    }
    out
}

/// `epoch,predicted,actual,predicted_smoothed,actual_smoothed` for a
/// two-node difference series.
pub fn subnet_csv(cmp: &SubnetComparison) -> String {
    let mut out = String::from("epoch,predicted,actual,predicted_smoothed,actual_smoothed\n");
    for i in 0..cmp.predicted.len() {
        out.push_str(&format!(
            "{i},{},{},{},{}\n",
            cmp.predicted[i], cmp.actual[i], cmp.predicted_smoothed[i], cmp.actual_smoothed[i]
        ));
    }
    out
}

/// One row per deletion variant. Spectral columns are empty when the
/// variant is disconnected; `deleted_links` joins ids with `+`.
pub fn variants_csv(sweep: &RobustnessSweep) -> String {
    let mut out =
        String::from("variant,deleted_links,connected,max_scaled_gap,top_energy_link,top_energy\n");
    for (i, v) in sweep.variants.iter().enumerate() {
        let deleted = v
            .deleted
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("+");
        if let (Some(spec), Some(energy)) = (&v.scaled_spectrum, &v.first_energy) {
            let gap = sweep
                .intact_scaled_spectrum
                .eigenvalues
                .iter()
                .zip(&spec.eigenvalues)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let (pos, top) = energy
                .energy
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(p, &e)| (p, e))
                .unwrap_or((0, 0.0));
            out.push_str(&format!(
                "{},{deleted},true,{gap},{},{top}\n",
                i + 1,
                v.kept_links[pos]
            ));
        } else {
            out.push_str(&format!("{},{deleted},false,,,\n", i + 1));
        }
    }
    out
}
