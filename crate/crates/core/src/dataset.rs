//! Dataset folders of raw Q15 channel estimates.
//!
//! One folder per distance and transmit gain, named `<D>m_ue_att_<x>` where
//! `x` is the attenuation from the 89.5 dB maximum gain. Each folder holds
//! four headerless files of interleaved little-endian `i16` I/Q:
//!
//! | file | contents |
//! |---|---|
//! | `srs_chF.raw` | LS estimates on the SRS comb |
//! | `srs_chF_lin_interp.raw` | the same after linear interpolation |
//! | `srs_chT.raw` | impulse response, `K` samples, scaled by `1/sqrt(K)` |
//! | `noise.raw` | empty-symbol samples on the comb positions |
//!
//! Several snapshots are stored as consecutive equal blocks. Simulated
//! records add a `meta.txt` of `key=value` lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::chanest::{
    estimate_channel, estimate_range, ChanestError, ChannelEstimate, EstimatorConfig, ImpulseSource, ToaDetector,
    ToaResult,
};
use crate::fixedpoint::{FixedPointError, IqBufferQ15, SampleQ15};
use crate::metrics::{estimate_snr, power_of_complex, SnrEstimate};
use crate::ofdm::NumerologyConfig;
use crate::refsig::{generate_srs, SrsConfig};
use crate::simchan::{simulate_rtt_exchange_jobs, RttScenario, SimError};

pub const SRS_CHF: &str = "srs_chF.raw";
pub const SRS_CHF_INTERP: &str = "srs_chF_lin_interp.raw";
pub const SRS_CHT: &str = "srs_chT.raw";
pub const NOISE: &str = "noise.raw";
pub const META: &str = "meta.txt";
pub const DATA_FILES: [&str; 4] = [SRS_CHF, SRS_CHF_INTERP, SRS_CHT, NOISE];

/// USRP B210 maximum transmit gain; `ue_att_x` means `89.5 - x` dB.
pub const MAX_TX_GAIN_DB: f64 = 89.5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: {len} bytes is not a whole number of I/Q samples")]
    Truncated { path: PathBuf, len: usize },
    #[error("folder name {0:?} does not contain <D>m and ue_att_<x>")]
    FolderName(String),
    #[error("transmit gain {0} dB is above the {MAX_TX_GAIN_DB} dB maximum")]
    Gain(f64),
    #[error("inconsistent record: {0}")]
    Shape(String),
    #[error("{path} line {line}: {msg}")]
    Meta { path: PathBuf, line: usize, msg: String },
    #[error("record has no noise samples")]
    NoNoise,
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Chanest(#[from] ChanestError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn number_prefix(s: &str) -> Option<(f64, usize)> {
    let end = s
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_digit() || c == '.'))
        .map_or(s.len(), |(i, _)| i);
    let v: f64 = s[..end].parse().ok()?;
    v.is_finite().then_some((v, end))
}

/// `(distance_m, tx_gain_db)` from a folder name.
///
/// The canonical form is `<D>m_ue_att_<x>`. Other names are accepted when
/// they contain `ue_att_<x>` and a separate `<D>m` token.
pub fn parse_folder_name(name: &str) -> Result<(f64, f64), DatasetError> {
    let bad = || DatasetError::FolderName(name.to_string());
    let at = name.find("ue_att_").ok_or_else(bad)?;
    let (att, _) = number_prefix(&name[at + 7..]).ok_or_else(bad)?;
    let distance = name
        .split(['_', '-', ' '])
        .filter_map(|t| t.strip_suffix('m'))
        .find_map(|t| match number_prefix(t) {
            Some((v, n)) if n == t.len() => Some(v),
            _ => None,
        })
        .ok_or_else(bad)?;
    Ok((distance, MAX_TX_GAIN_DB - att))
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Canonical folder name: `folder_name(10.0, 89.5) == "10m_ue_att_0"`.
pub fn folder_name(distance_m: f64, tx_gain_db: f64) -> Result<String, DatasetError> {
    let att = MAX_TX_GAIN_DB - tx_gain_db;
    if att < 0.0 {
        return Err(DatasetError::Gain(tx_gain_db));
    }
    // Round off binary noise such as 89.5 - 39.5 = 50.00000000000001.
    let att = (att * 1e9).round() / 1e9;
    Ok(format!("{}m_ue_att_{}", fmt_num(distance_m), fmt_num(att)))
}

/// Sidecar metadata of simulated records.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub numerology: NumerologyConfig,
    pub srs: SrsConfig,
    pub seed: u64,
    pub snr_db: f64,
    pub ground_truth_delay_samples: f64,
    pub snapshots: usize,
}

impl RecordMeta {
    pub fn to_text(&self) -> String {
        let n = &self.numerology;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("fft_size", n.fft_size.to_string());
        kv("scs_hz", fmt_num(n.scs_hz));
        kv("sampling_rate_hz", fmt_num(n.sampling_rate_hz));
        kv("cp_len", n.cp_len.to_string());
        kv("occupied_subcarriers", n.occupied_subcarriers.to_string());
        kv("center_freq_hz", fmt_num(n.center_freq_hz));
        kv("srs_start_re", self.srs.start_re.to_string());
        kv("srs_comb_size", self.srs.comb_size.to_string());
        kv("srs_num_subcarriers", self.srs.num_subcarriers.to_string());
        kv("srs_zc_root", self.srs.zc_root.to_string());
        kv("srs_cyclic_shift", self.srs.cyclic_shift.to_string());
        kv("seed", self.seed.to_string());
        kv("snr_db", fmt_num(self.snr_db));
        kv("ground_truth_delay_samples", fmt_num(self.ground_truth_delay_samples));
        kv("snapshots", self.snapshots.to_string());
        kv("impulse_scale", "1/sqrt(fft_size)".to_string());
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, DatasetError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| DatasetError::Meta {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected key=value, got {t:?}"),
            })?;
            map.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        fn get<T: std::str::FromStr>(
            map: &BTreeMap<String, (usize, String)>,
            key: &str,
            path: &Path,
        ) -> Result<T, DatasetError> {
            let (line, v) = map.get(key).ok_or_else(|| DatasetError::Meta {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("missing key {key}"),
            })?;
            v.parse().map_err(|_| DatasetError::Meta {
                path: path.to_path_buf(),
                line: *line,
                msg: format!("bad value {v:?} for {key}"),
            })
        }
        let numerology = NumerologyConfig {
            fft_size: get(&map, "fft_size", path)?,
            scs_hz: get(&map, "scs_hz", path)?,
            sampling_rate_hz: get(&map, "sampling_rate_hz", path)?,
            cp_len: get(&map, "cp_len", path)?,
            occupied_subcarriers: get(&map, "occupied_subcarriers", path)?,
            center_freq_hz: get(&map, "center_freq_hz", path)?,
        };
        let srs = SrsConfig {
            comb_size: get(&map, "srs_comb_size", path)?,
            num_subcarriers: get(&map, "srs_num_subcarriers", path)?,
            start_re: get(&map, "srs_start_re", path)?,
            symbol: 0,
            zc_root: get(&map, "srs_zc_root", path)?,
            cyclic_shift: get(&map, "srs_cyclic_shift", path)?,
        };
        Ok(Self {
            numerology,
            srs,
            seed: get(&map, "seed", path)?,
            snr_db: get(&map, "snr_db", path)?,
            ground_truth_delay_samples: get(&map, "ground_truth_delay_samples", path)?,
            snapshots: get(&map, "snapshots", path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub distance_m: f64,
    pub tx_gain_db: f64,
    pub srs_chf: IqBufferQ15,
    pub srs_chf_lin_interp: IqBufferQ15,
    pub srs_cht: IqBufferQ15,
    pub noise: IqBufferQ15,
    pub meta: Option<RecordMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetWarning {
    EmptyNoise,
}

impl DatasetRecord {
    /// Snapshot count implied by `srs_chT` holding blocks of `fft_size`.
    pub fn snapshot_count(&self, fft_size: usize) -> Result<usize, DatasetError> {
        let t = self.srs_cht.len();
        if fft_size == 0 || t == 0 || !t.is_multiple_of(fft_size) {
            return Err(DatasetError::Shape(format!(
                "srs_chT has {t} samples, not a multiple of FFT size {fft_size}"
            )));
        }
        let m = t / fft_size;
        for (name, len) in [
            (SRS_CHF, self.srs_chf.len()),
            (SRS_CHF_INTERP, self.srs_chf_lin_interp.len()),
            (NOISE, self.noise.len()),
        ] {
            if len % m != 0 {
                return Err(DatasetError::Shape(format!("{name} has {len} samples, not {m} equal blocks")));
            }
        }
        if self.srs_chf_lin_interp.len() < self.srs_chf.len() {
            return Err(DatasetError::Shape(format!(
                "interpolated estimate ({}) shorter than comb estimate ({})",
                self.srs_chf_lin_interp.len(),
                self.srs_chf.len()
            )));
        }
        Ok(m)
    }

    fn fft_size(&self) -> usize {
        self.meta
            .as_ref()
            .map_or(NumerologyConfig::default().fft_size, |m| m.numerology.fft_size)
    }

    pub fn validate(&self) -> Result<usize, DatasetError> {
        self.snapshot_count(self.fft_size())
    }
}

fn read_iq(path: &Path) -> Result<IqBufferQ15, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    IqBufferQ15::from_le_bytes(&bytes).map_err(|_| DatasetError::Truncated {
        path: path.to_path_buf(),
        len: bytes.len(),
    })
}

/// Reads the four files (and `meta.txt`, when present) of one folder.
pub fn read_record(folder: &Path) -> Result<(DatasetRecord, Vec<DatasetWarning>), DatasetError> {
    let meta_path = folder.join(META);
    let meta = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        Some(RecordMeta::parse(&text, &meta_path)?)
    } else {
        None
    };
    let name = folder.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (distance_m, tx_gain_db) = parse_folder_name(&name)?;
    let rec = DatasetRecord {
        distance_m,
        tx_gain_db,
        srs_chf: read_iq(&folder.join(SRS_CHF))?,
        srs_chf_lin_interp: read_iq(&folder.join(SRS_CHF_INTERP))?,
        srs_cht: read_iq(&folder.join(SRS_CHT))?,
        noise: read_iq(&folder.join(NOISE))?,
        meta,
    };
    rec.validate()?;
    let mut warnings = Vec::new();
    if rec.noise.is_empty() {
        warnings.push(DatasetWarning::EmptyNoise);
    }
    Ok((rec, warnings))
}

/// Writes `rec` into `parent/<canonical folder name>` and returns that path.
pub fn write_record(rec: &DatasetRecord, parent: &Path) -> Result<PathBuf, DatasetError> {
    let folder = parent.join(folder_name(rec.distance_m, rec.tx_gain_db)?);
    fs::create_dir_all(&folder).map_err(io_err(&folder))?;
    for (name, buf) in [
        (SRS_CHF, &rec.srs_chf),
        (SRS_CHF_INTERP, &rec.srs_chf_lin_interp),
        (SRS_CHT, &rec.srs_cht),
        (NOISE, &rec.noise),
    ] {
        let p = folder.join(name);
        fs::write(&p, buf.to_le_bytes()).map_err(io_err(&p))?;
    }
    if let Some(meta) = &rec.meta {
        let p = folder.join(META);
        fs::write(&p, meta.to_text()).map_err(io_err(&p))?;
    }
    Ok(folder)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub path: PathBuf,
    pub distance_m: f64,
    pub tx_gain_db: f64,
    /// Sizes of the four data files in bytes, in [`DATA_FILES`] order.
    pub sizes: [u64; 4],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanReport {
    pub records: Vec<ScanEntry>,
    /// Subfolders that are not records, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Lists record folders directly under `root`, by distance then descending gain.
pub fn scan_root(root: &Path) -> Result<ScanReport, DatasetError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut report = ScanReport::default();
    for dir in dirs {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let (distance_m, tx_gain_db) = match parse_folder_name(&name) {
            Ok(v) => v,
            Err(e) => {
                report.skipped.push((dir, e.to_string()));
                continue;
            }
        };
        let mut sizes = [0u64; 4];
        let mut missing = None;
        for (s, f) in sizes.iter_mut().zip(DATA_FILES) {
            match fs::metadata(dir.join(f)) {
                Ok(m) => *s = m.len(),
                Err(_) => {
                    missing = Some(f);
                    break;
                }
            }
        }
        match missing {
            Some(f) => report.skipped.push((dir, format!("missing file {f}"))),
            None => report.records.push(ScanEntry {
                path: dir,
                distance_m,
                tx_gain_db,
                sizes,
            }),
        }
    }
    report.records.sort_by(|a, b| {
        a.distance_m
            .total_cmp(&b.distance_m)
            .then(b.tx_gain_db.total_cmp(&a.tx_gain_db))
            .then_with(|| a.path.cmp(&b.path))
    });
    Ok(report)
}

fn quantize(values: &[Complex64], scale: f64, out: &mut Vec<SampleQ15>) -> Result<(), DatasetError> {
    for &z in values {
        out.push(SampleQ15::from_complex_round(z * scale)?);
    }
    Ok(())
}

/// Packs channel estimates into a record, one block per estimate.
pub fn record_from_estimates(
    distance_m: f64,
    tx_gain_db: f64,
    estimates: &[ChannelEstimate],
    meta: Option<RecordMeta>,
) -> Result<DatasetRecord, DatasetError> {
    let (mut chf, mut interp, mut cht, mut noise) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for e in estimates {
        quantize(&e.freq_comb, 1.0, &mut chf)?;
        quantize(&e.freq_interp, 1.0, &mut interp)?;
        quantize(&e.impulse, 1.0 / (e.impulse.len() as f64).sqrt(), &mut cht)?;
        quantize(&e.noise_comb, 1.0, &mut noise)?;
    }
    Ok(DatasetRecord {
        distance_m,
        tx_gain_db,
        srs_chf: chf.into(),
        srs_chf_lin_interp: interp.into(),
        srs_cht: cht.into(),
        noise: noise.into(),
        meta,
    })
}

/// Simulates `sc` and stores every snapshot's estimate in one record.
pub fn simulate_record(sc: &RttScenario, tx_gain_db: f64, jobs: usize) -> Result<DatasetRecord, DatasetError> {
    let snaps = simulate_rtt_exchange_jobs(sc, jobs)?;
    let srs = generate_srs(&sc.srs, &sc.numerology).map_err(SimError::from)?;
    let cfg = EstimatorConfig::for_srs(&sc.srs, &sc.numerology);
    let estimates = snaps
        .iter()
        .map(|s| estimate_channel(&s.rx_grid, &srs, 1, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let meta = RecordMeta {
        numerology: sc.numerology.clone(),
        srs: sc.srs.clone(),
        seed: sc.seed,
        snr_db: sc.snr_db,
        ground_truth_delay_samples: sc.round_trip_delay_samples(),
        snapshots: sc.num_snapshots,
    };
    record_from_estimates(sc.distance_m, tx_gain_db, &estimates, Some(meta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordEstimate {
    pub toa: ToaResult,
    pub range_m: f64,
    pub snapshots: usize,
    /// SNR from the comb estimate and noise powers of the first snapshot.
    pub snr: SnrEstimate,
}

/// Estimator settings for a record: from `meta.txt` when present, otherwise
/// the default numerology and SRS.
pub fn record_config(rec: &DatasetRecord) -> (NumerologyConfig, EstimatorConfig) {
    match &rec.meta {
        Some(m) => (m.numerology.clone(), EstimatorConfig::for_srs(&m.srs, &m.numerology)),
        None => {
            let num = NumerologyConfig::default();
            let cfg = EstimatorConfig::for_srs(&SrsConfig::for_numerology(&num), &num);
            (num, cfg)
        }
    }
}

/// Combines all snapshots of a record coherently and estimates the range.
pub fn estimate_record(
    rec: &DatasetRecord,
    source: ImpulseSource,
    detector: Option<&ToaDetector>,
    bias_samples: f64,
) -> Result<RecordEstimate, DatasetError> {
    let (num, mut cfg) = record_config(rec);
    cfg.source = source;
    let m = rec.snapshot_count(num.fft_size)?;
    if rec.noise.is_empty() {
        return Err(DatasetError::NoNoise);
    }
    let comb = rec.srs_chf.to_complex();
    let noise = rec.noise.to_complex();
    let (cl, nl) = (comb.len() / m, noise.len() / m);
    if cl != nl {
        return Err(DatasetError::Shape(format!("comb blocks of {cl} but noise blocks of {nl}")));
    }
    let estimates = comb
        .chunks(cl)
        .zip(noise.chunks(nl))
        .map(|(c, n)| ChannelEstimate::from_comb(c.to_vec(), n.to_vec(), &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let snr = estimate_snr(
        &power_of_complex(&estimates[0].freq_comb).map_err(ChanestError::from)?,
        &power_of_complex(&estimates[0].noise_comb).map_err(ChanestError::from)?,
    )
    .map_err(ChanestError::from)?;
    let combined = ChannelEstimate::combine(&estimates, &cfg)?;
    let default_det = ToaDetector::for_numerology(&num);
    let r = estimate_range(&combined, detector.unwrap_or(&default_det), &num, bias_samples)?;
    Ok(RecordEstimate {
        toa: r.toa,
        range_m: r.range_m,
        snapshots: m,
        snr,
    })
}
