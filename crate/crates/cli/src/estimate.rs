//! `nrpos estimate`: ToA and range for every record under a dataset root.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nrpos::chanest::{ImpulseSource, PeakMode, ToaDetector};
use nrpos::dataset::{estimate_record, read_record, record_config, scan_root, DatasetWarning, SRS_CHF};

use crate::error::{CliError, Result};

pub const CSV_COLUMNS: &str = "file,peak_index,frac_offset,toa_ns,range_m,peak_to_noise_db,reliable,\
distance_m,tx_gain_db,range_error_m,snapshots,snr_db";

pub struct EstimateArgs {
    pub source: ImpulseSource,
    pub mode: PeakMode,
    pub threshold_db: Option<f64>,
    pub bias_samples: f64,
}

fn record_dirs(root: &Path, warnings: &mut Vec<String>) -> Result<Vec<PathBuf>> {
    if root.join(SRS_CHF).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let report = scan_root(root)?;
    for (p, why) in &report.skipped {
        warnings.push(format!("skipping {}: {why}", p.display()));
    }
    Ok(report.records.into_iter().map(|e| e.path).collect())
}

/// Returns the CSV and the warnings. Fails only when records exist and none
/// could be processed.
pub fn run(root: &Path, args: &EstimateArgs, seed: u64) -> Result<(String, Vec<String>)> {
    let mut warnings = Vec::new();
    let dirs = record_dirs(root, &mut warnings)?;
    let mut csv = format!("# nrpos estimate seed={seed}\n{CSV_COLUMNS}\n");
    if dirs.is_empty() {
        warnings.push(format!("no dataset records under {}", root.display()));
        return Ok((csv, warnings));
    }
    let mut ok = 0usize;
    for dir in &dirs {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let result = read_record(dir).map_err(CliError::from).and_then(|(rec, w)| {
            if w.contains(&DatasetWarning::EmptyNoise) {
                warnings.push(format!("{name}: noise.raw is empty"));
            }
            let (num, _) = record_config(&rec);
            let mut det = ToaDetector::for_numerology(&num);
            det.mode = args.mode;
            if let Some(t) = args.threshold_db {
                det.threshold_db = t;
            }
            let est = estimate_record(&rec, args.source, Some(&det), args.bias_samples)?;
            Ok((rec, est))
        });
        match result {
            Ok((rec, est)) => {
                ok += 1;
                let _ = writeln!(
                    csv,
                    "{name},{},{:.4},{:.4},{:.4},{:.2},{},{},{},{:.4},{},{:.2}",
                    est.toa.peak_index,
                    est.toa.frac_offset,
                    est.toa.toa_seconds * 1e9,
                    est.range_m,
                    est.toa.peak_to_noise_db,
                    est.toa.reliable,
                    rec.distance_m,
                    rec.tx_gain_db,
                    est.range_m - rec.distance_m,
                    est.snapshots,
                    est.snr.db,
                );
            }
            Err(e) => warnings.push(format!("skipping {name}: {e}")),
        }
    }
    if ok == 0 {
        return Err(CliError::Data(format!(
            "none of the {} records under {} could be estimated",
            dirs.len(),
            root.display()
        )));
    }
    Ok((csv, warnings))
}
