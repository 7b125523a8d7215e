//! `nrpos dataset scan`: inventory of a dataset root.

use std::fmt::Write as _;
use std::path::Path;

use nrpos::dataset::scan_root;

use crate::error::Result;

pub fn run(root: &Path, seed: u64) -> Result<(String, Vec<String>)> {
    let report = scan_root(root)?;
    let mut csv = format!(
        "# nrpos dataset scan seed={seed}\nfolder,distance_m,tx_gain_db,srs_chF_bytes,srs_chF_lin_interp_bytes,srs_chT_bytes,noise_bytes\n"
    );
    for e in &report.records {
        let name = e.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let [a, b, c, d] = e.sizes;
        let _ = writeln!(csv, "{name},{},{},{a},{b},{c},{d}", e.distance_m, e.tx_gain_db);
    }
    let warnings = report
        .skipped
        .iter()
        .map(|(p, why)| format!("skipping {}: {why}", p.display()))
        .collect();
    Ok((csv, warnings))
}
