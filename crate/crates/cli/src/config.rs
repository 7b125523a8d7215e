//! Flat `key = value` config files. Every key must be consumed; leftovers
//! are reported as typos.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nrpos::fixedpoint::Amplitude;
use nrpos::metrics::DeviceProfile;
use nrpos::NumerologyConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct KvConfig {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl KvConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1))
            })?;
            let k = k.trim().to_string();
            if let Some((first, _)) = entries.insert(k.clone(), (i + 1, v.trim().to_string())) {
                return Err(CliError::Usage(format!(
                    "{}:{}: key {k} already set on line {first}",
                    path.display(),
                    i + 1
                )));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("{}:{line}: bad value {v:?} for {key}", self.path.display()))
            }),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{}:{line}: bad list {v:?} for {key}", self.path.display()))),
        }
    }

    pub fn finish(self) -> Result<()> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(CliError::Usage(format!(
                "{}:{line}: unknown key {k}",
                self.path.display()
            ))),
        }
    }
}

/// Numerology keys, defaulting to the 38.16 MHz configuration.
pub fn take_numerology(cfg: &mut KvConfig) -> Result<NumerologyConfig> {
    let d = NumerologyConfig::default();
    let num = NumerologyConfig {
        fft_size: cfg.take_or("fft_size", d.fft_size)?,
        scs_hz: cfg.take_or("scs_hz", d.scs_hz)?,
        sampling_rate_hz: cfg.take_or("sampling_rate_hz", d.sampling_rate_hz)?,
        cp_len: cfg.take_or("cp_len", d.cp_len)?,
        occupied_subcarriers: cfg.take_or("occupied_subcarriers", d.occupied_subcarriers)?,
        center_freq_hz: cfg.take_or("center_freq_hz", d.center_freq_hz)?,
    };
    num.validate()?;
    Ok(num)
}

pub fn parse_device(name: &str) -> Result<DeviceProfile> {
    DeviceProfile::by_name(name).ok_or_else(|| {
        CliError::Usage(format!("unknown device {name:?} (expected usrp-b210 or oran-vvdn-ru)"))
    })
}

/// `device`, then optional `amplitude` and gain overrides.
pub fn take_device(cfg: &mut KvConfig) -> Result<DeviceProfile> {
    let mut dev = match cfg.take::<String>("device")? {
        Some(name) => parse_device(&name)?,
        None => DeviceProfile::default(),
    };
    if let Some(a) = cfg.take::<i64>("amplitude")? {
        dev.amp = Amplitude::new(a)?;
    }
    dev.g_t = cfg.take_or("g_t_db", dev.g_t)?;
    dev.g_r = cfg.take_or("g_r_db", dev.g_r)?;
    dev.g_t_cal = cfg.take_or("g_t_cal_db", dev.g_t_cal)?;
    dev.g_r_cal = cfg.take_or("g_r_cal_db", dev.g_r_cal)?;
    Ok(dev)
}
