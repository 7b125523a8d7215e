//! `nrpos metrics`: per-RE power, dBm and SNR of raw Q15 files.

use std::fmt::Write as _;
use std::path::Path;

use nrpos::metrics::{estimate_snr, power_per_re, rx_power_dbm, tx_power_dbm, DeviceProfile};
use nrpos::IqBufferQ15;

use crate::error::{CliError, Result};

fn load(path: &Path) -> Result<IqBufferQ15> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    IqBufferQ15::from_le_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run(input: &Path, noise: Option<&Path>, dev: &DeviceProfile, seed: u64) -> Result<String> {
    let sig = load(input)?;
    let p = power_per_re(sig.samples())?;
    let mut out = format!(
        "# nrpos metrics seed={seed} device={}\nfile,samples,power_db,tx_dbm,rx_dbm,noise_db,snr_db,snr_unreliable\n",
        dev.name
    );
    let _ = write!(
        out,
        "{},{},{:.4},{:.4},{:.4}",
        input.display(),
        p.n_res,
        p.db()?,
        tx_power_dbm(&p, dev)?,
        rx_power_dbm(&p, dev)?
    );
    match noise {
        Some(n) => {
            let pn = power_per_re(load(n)?.samples())?;
            let snr = estimate_snr(&p, &pn)?;
            let _ = writeln!(out, ",{:.4},{:.4},{}", pn.db()?, snr.db, snr.unreliable);
        }
        None => out.push_str(",,,\n"),
    }
    Ok(out)
}
