//! Positioning reference signals: SRS, PRS and PRACH preambles.
//!
//! Sequences are produced in double precision with unit modulus and carry the
//! resource elements they occupy. Quantization to Q15 happens once, when the
//! signal is mapped onto a [`ResourceGrid`](crate::ofdm::ResourceGrid).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::ofdm::{NumerologyConfig, ReIndex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefSigError {
    #[error("root {root} is not coprime with length {length}")]
    InvalidRoot { root: u32, length: u32 },
    #[error("Zadoff-Chu length {0} must be odd")]
    EvenLength(u32),
    #[error("cyclic shift {shift} out of range for {limit}")]
    ShiftOutOfRange { shift: u32, limit: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown PRACH format {0:?}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    Srs,
    Prs,
    Prach,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Srs => "srs",
            SignalKind::Prs => "prs",
            SignalKind::Prach => "prach",
        })
    }
}

/// Frequency-domain symbols and the resource elements they occupy.
///
/// `re_indices` is strictly increasing (symbol-major) and has the same length
/// as `symbols`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub symbols: Vec<Complex64>,
    pub re_indices: Vec<ReIndex>,
    pub kind: SignalKind,
}

impl ReferenceSignal {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest prime not exceeding `n`.
pub fn largest_prime_at_most(n: u32) -> Option<u32> {
    (2..=n).rev().find(|&p| is_prime(p))
}

/// `z[n] = exp(-j pi u n (n+1) / N)`, read cyclically from index `shift`.
pub fn generate_zadoff_chu(root: u32, length: u32, shift: u32) -> Result<Vec<Complex64>, RefSigError> {
    if length.is_multiple_of(2) {
        return Err(RefSigError::EvenLength(length));
    }
    if root == 0 || gcd(u64::from(root), u64::from(length)) != 1 {
        return Err(RefSigError::InvalidRoot { root, length });
    }
    if shift >= length {
        return Err(RefSigError::ShiftOutOfRange { shift, limit: length });
    }
    let n_zc = u64::from(length);
    let u = u64::from(root) % n_zc;
    // Exponent reduced modulo 2N in integers keeps the phase exact for long sequences.
    let base: Vec<Complex64> = (0..n_zc)
        .map(|n| {
            let m = (u * ((n * (n + 1)) % (2 * n_zc))) % (2 * n_zc);
            Complex64::from_polar(1.0, -PI * m as f64 / n_zc as f64)
        })
        .collect();
    let s = shift as usize;
    Ok((0..base.len()).map(|n| base[(n + s) % base.len()]).collect())
}

/// Pseudo-random bits from two length-31 LFSRs.
///
/// `x1` starts at `1, 0, ..., 0`, `x2` at the bits of `c_init`, and output bit
/// `n` is `x1(n + 1600) ^ x2(n + 1600)`, where
/// `x1(n+31) = x1(n+3) ^ x1(n)` and
/// `x2(n+31) = x2(n+3) ^ x2(n+2) ^ x2(n+1) ^ x2(n)`.
#[derive(Debug, Clone)]
pub struct Gold31 {
    x1: u32,
    x2: u32,
}

impl Gold31 {
    pub const OUTPUT_OFFSET: usize = 1600;

    pub fn new(c_init: u32) -> Self {
        let mut g = Self {
            x1: 1,
            x2: c_init & 0x7FFF_FFFF,
        };
        for _ in 0..Self::OUTPUT_OFFSET {
            g.step();
        }
        g
    }

    // Bit j of each register holds x(n + j) for j in 0..31.
    fn step(&mut self) {
        let f1 = (self.x1 ^ (self.x1 >> 3)) & 1;
        let f2 = (self.x2 ^ (self.x2 >> 1) ^ (self.x2 >> 2) ^ (self.x2 >> 3)) & 1;
        self.x1 = (self.x1 >> 1) | (f1 << 30);
        self.x2 = (self.x2 >> 1) | (f2 << 30);
    }
}

impl Iterator for Gold31 {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        let bit = ((self.x1 ^ self.x2) & 1) as u8;
        self.step();
        Some(bit)
    }
}

pub fn generate_gold31(c_init: u32, length: usize) -> Vec<u8> {
    Gold31::new(c_init).take(length).collect()
}

/// QPSK symbol for the bit pair `(b0, b1)`: `((1-2 b0) + j (1-2 b1)) / sqrt 2`.
pub fn qpsk(b0: u8, b1: u8) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * (1.0 - 2.0 * f64::from(b0)), s * (1.0 - 2.0 * f64::from(b1)))
}

fn check_band(
    num: &NumerologyConfig,
    first: usize,
    last: usize,
    what: &str,
) -> Result<(), RefSigError> {
    if first < num.band_start() || last >= num.band_end() {
        return Err(RefSigError::Config(format!(
            "{what} occupies subcarriers {first}..={last}, outside the occupied band {}..{}",
            num.band_start(),
            num.band_end()
        )));
    }
    Ok(())
}

/// Periodic comb SRS, single antenna port, no group or sequence hopping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrsConfig {
    /// Transmission comb, 2 or 4.
    pub comb_size: usize,
    /// Number of occupied resource elements `N`.
    pub num_subcarriers: usize,
    /// Logical grid subcarrier of the first SRS element.
    pub start_re: usize,
    /// OFDM symbol carrying the SRS.
    pub symbol: usize,
    pub zc_root: u32,
    pub cyclic_shift: u32,
}

impl SrsConfig {
    /// Default SRS bandwidth of the prototype link.
    pub const DEFAULT_BANDWIDTH_HZ: f64 = 37.44e6;

    /// Comb-2 SRS spanning `bandwidth_hz`, centered in the occupied band,
    /// root 1, shift 0.
    pub fn centered(num: &NumerologyConfig, bandwidth_hz: f64, comb_size: usize) -> Self {
        let width = (bandwidth_hz / num.scs_hz).round() as usize;
        let width = width.min(num.occupied_subcarriers);
        Self {
            comb_size,
            num_subcarriers: width / comb_size.max(1),
            start_re: num.band_start() + (num.occupied_subcarriers - width) / 2,
            symbol: 0,
            zc_root: 1,
            cyclic_shift: 0,
        }
    }

    pub fn for_numerology(num: &NumerologyConfig) -> Self {
        Self::centered(num, Self::DEFAULT_BANDWIDTH_HZ, 2)
    }

    /// Number of cyclic shifts available for the comb (8 for comb 2, 12 for comb 4).
    pub fn max_cyclic_shifts(&self) -> u32 {
        if self.comb_size == 4 {
            12
        } else {
            8
        }
    }

    pub fn re_indices(&self) -> Vec<ReIndex> {
        (0..self.num_subcarriers)
            .map(|n| ReIndex::new(self.symbol, self.start_re + n * self.comb_size))
            .collect()
    }
}

/// Comb-mapped Zadoff-Chu SRS.
///
/// The base sequence has the largest prime length `N_zc <= N` and is extended
/// cyclically to `N`. The cyclic shift is applied as the phase ramp
/// `exp(j 2 pi cs n / cs_max)`.
pub fn generate_srs(cfg: &SrsConfig, num: &NumerologyConfig) -> Result<ReferenceSignal, RefSigError> {
    if cfg.comb_size != 2 && cfg.comb_size != 4 {
        return Err(RefSigError::Config(format!(
            "SRS comb size {} must be 2 or 4",
            cfg.comb_size
        )));
    }
    if cfg.num_subcarriers < 3 {
        return Err(RefSigError::Config("SRS needs at least 3 subcarriers".into()));
    }
    if cfg.num_subcarriers * cfg.comb_size > num.occupied_subcarriers {
        return Err(RefSigError::Config(format!(
            "SRS spans {} subcarriers, grid has {}",
            cfg.num_subcarriers * cfg.comb_size,
            num.occupied_subcarriers
        )));
    }
    let last = cfg.start_re + (cfg.num_subcarriers - 1) * cfg.comb_size;
    check_band(num, cfg.start_re, last, "SRS")?;
    let cs_max = cfg.max_cyclic_shifts();
    if cfg.cyclic_shift >= cs_max {
        return Err(RefSigError::ShiftOutOfRange {
            shift: cfg.cyclic_shift,
            limit: cs_max,
        });
    }
    let n_zc = largest_prime_at_most(cfg.num_subcarriers as u32)
        .ok_or_else(|| RefSigError::Config("SRS too short".into()))?;
    let base = generate_zadoff_chu(cfg.zc_root, n_zc, 0)?;
    let alpha = 2.0 * PI * f64::from(cfg.cyclic_shift) / f64::from(cs_max);
    let symbols = (0..cfg.num_subcarriers)
        .map(|n| base[n % base.len()] * Complex64::from_polar(1.0, alpha * n as f64))
        .collect();
    Ok(ReferenceSignal {
        symbols,
        re_indices: cfg.re_indices(),
        kind: SignalKind::Srs,
    })
}

/// Downlink PRS resource.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrsConfig {
    pub num_prb: usize,
    /// Consecutive OFDM symbols: 2, 4, 6 or 12.
    pub num_symbols: usize,
    /// 31-bit generator seed.
    pub gold_seed: u32,
    /// Comb size: 2, 4, 6 or 12.
    pub comb_size: usize,
    /// Comb offset of the first symbol; symbol `l` uses `(re_offset + l) mod comb_size`.
    pub re_offset: usize,
    /// Logical subcarrier of the first PRB.
    pub start_re: usize,
    pub first_symbol: usize,
}

impl PrsConfig {
    pub const PRB_WIDTH: usize = 12;

    /// PRS over the whole occupied band.
    pub fn full_band(num: &NumerologyConfig, num_symbols: usize, comb_size: usize, gold_seed: u32) -> Self {
        let num_prb = num.occupied_subcarriers / Self::PRB_WIDTH;
        Self {
            num_prb,
            num_symbols,
            gold_seed,
            comb_size,
            re_offset: 0,
            start_re: num.band_start() + (num.occupied_subcarriers - num_prb * Self::PRB_WIDTH) / 2,
            first_symbol: 0,
        }
    }

    pub fn res_per_symbol(&self) -> usize {
        self.num_prb * Self::PRB_WIDTH / self.comb_size
    }
}

/// Gold-sequence QPSK PRS, comb-mapped with a per-symbol cyclic comb offset.
pub fn generate_prs(cfg: &PrsConfig, num: &NumerologyConfig) -> Result<ReferenceSignal, RefSigError> {
    if ![2, 4, 6, 12].contains(&cfg.num_symbols) {
        return Err(RefSigError::Config(format!(
            "PRS symbol count {} must be one of 2, 4, 6, 12",
            cfg.num_symbols
        )));
    }
    if ![2, 4, 6, 12].contains(&cfg.comb_size) {
        return Err(RefSigError::Config(format!(
            "PRS comb size {} must be one of 2, 4, 6, 12",
            cfg.comb_size
        )));
    }
    if cfg.num_prb == 0 {
        return Err(RefSigError::Config("PRS needs at least one PRB".into()));
    }
    if cfg.re_offset >= cfg.comb_size {
        return Err(RefSigError::Config(format!(
            "PRS RE offset {} must be below the comb size {}",
            cfg.re_offset, cfg.comb_size
        )));
    }
    if cfg.gold_seed >= 1 << 31 {
        return Err(RefSigError::Config(format!(
            "PRS seed {:#x} exceeds 31 bits",
            cfg.gold_seed
        )));
    }
    check_band(
        num,
        cfg.start_re,
        cfg.start_re + cfg.num_prb * PrsConfig::PRB_WIDTH - 1,
        "PRS",
    )?;
    let per_symbol = cfg.res_per_symbol();
    let total = per_symbol * cfg.num_symbols;
    let bits = generate_gold31(cfg.gold_seed, 2 * total);
    let symbols = bits.chunks_exact(2).map(|b| qpsk(b[0], b[1])).collect();
    let mut re_indices = Vec::with_capacity(total);
    for l in 0..cfg.num_symbols {
        let offset = (cfg.re_offset + l) % cfg.comb_size;
        for m in 0..per_symbol {
            re_indices.push(ReIndex::new(
                cfg.first_symbol + l,
                cfg.start_re + offset + m * cfg.comb_size,
            ));
        }
    }
    Ok(ReferenceSignal {
        symbols,
        re_indices,
        kind: SignalKind::Prs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrachFormat {
    F0,
    F1,
    F2,
    F3,
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
}

impl PrachFormat {
    pub const ALL: [PrachFormat; 10] = [
        PrachFormat::F0,
        PrachFormat::F1,
        PrachFormat::F2,
        PrachFormat::F3,
        PrachFormat::A1,
        PrachFormat::A2,
        PrachFormat::A3,
        PrachFormat::B1,
        PrachFormat::B2,
        PrachFormat::B3,
    ];

    /// 839 for the long formats 0-3, 139 for the short A/B formats.
    pub fn sequence_length(self) -> u32 {
        match self {
            PrachFormat::F0 | PrachFormat::F1 | PrachFormat::F2 | PrachFormat::F3 => 839,
            _ => 139,
        }
    }
}

impl FromStr for PrachFormat {
    type Err = RefSigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "0" | "F0" => PrachFormat::F0,
            "1" | "F1" => PrachFormat::F1,
            "2" | "F2" => PrachFormat::F2,
            "3" | "F3" => PrachFormat::F3,
            "A1" => PrachFormat::A1,
            "A2" => PrachFormat::A2,
            "A3" => PrachFormat::A3,
            "B1" => PrachFormat::B1,
            "B2" => PrachFormat::B2,
            "B3" => PrachFormat::B3,
            _ => return Err(RefSigError::UnknownFormat(s.to_string())),
        })
    }
}

impl fmt::Display for PrachFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PrachFormat::F0 => "0",
            PrachFormat::F1 => "1",
            PrachFormat::F2 => "2",
            PrachFormat::F3 => "3",
            PrachFormat::A1 => "A1",
            PrachFormat::A2 => "A2",
            PrachFormat::A3 => "A3",
            PrachFormat::B1 => "B1",
            PrachFormat::B2 => "B2",
            PrachFormat::B3 => "B3",
        };
        f.write_str(s)
    }
}

/// PRACH preamble placed on contiguous subcarriers of one OFDM symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrachConfig {
    pub format: PrachFormat,
    pub zc_root: u32,
    pub cyclic_shift: u32,
    pub start_re: usize,
    pub symbol: usize,
}

impl PrachConfig {
    /// Preamble centered on DC.
    pub fn centered(num: &NumerologyConfig, format: PrachFormat, zc_root: u32, cyclic_shift: u32) -> Self {
        let len = format.sequence_length() as usize;
        Self {
            format,
            zc_root,
            cyclic_shift,
            start_re: (num.fft_size / 2).saturating_sub(len / 2),
            symbol: 0,
        }
    }

    pub fn sequence_length(&self) -> u32 {
        self.format.sequence_length()
    }

    pub fn re_indices(&self) -> Vec<ReIndex> {
        (0..self.sequence_length() as usize)
            .map(|n| ReIndex::new(self.symbol, self.start_re + n))
            .collect()
    }
}

pub fn generate_prach(cfg: &PrachConfig, num: &NumerologyConfig) -> Result<ReferenceSignal, RefSigError> {
    let len = cfg.sequence_length();
    check_band(num, cfg.start_re, cfg.start_re + len as usize - 1, "PRACH")?;
    let symbols = generate_zadoff_chu(cfg.zc_root, len, cfg.cyclic_shift)?;
    Ok(ReferenceSignal {
        symbols,
        re_indices: cfg.re_indices(),
        kind: SignalKind::Prach,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic_corr(a: &[Complex64], b: &[Complex64], lag: usize) -> Complex64 {
        let n = a.len();
        (0..n).map(|i| a[i] * b[(i + lag) % n].conj()).sum()
    }

    #[test]
    fn zc_closed_form_value() {
        let z = generate_zadoff_chu(2, 5, 0).unwrap();
        let expected = Complex64::from_polar(1.0, -4.0 * PI / 5.0);
        assert!((z[1] - expected).norm() < 1e-12);
        assert!((z[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zc_constant_amplitude_and_ideal_autocorrelation() {
        let z = generate_zadoff_chu(1, 139, 0).unwrap();
        assert!(z.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!((periodic_corr(&z, &z, 0).norm() - 139.0).abs() < 1e-9);
        for lag in 1..139 {
            assert!(periodic_corr(&z, &z, lag).norm() < 1e-6, "lag {lag}");
        }
    }

    #[test]
    fn zc_errors() {
        assert_eq!(
            generate_zadoff_chu(3, 9, 0),
            Err(RefSigError::InvalidRoot { root: 3, length: 9 })
        );
        assert_eq!(generate_zadoff_chu(1, 10, 0), Err(RefSigError::EvenLength(10)));
        assert!(matches!(
            generate_zadoff_chu(1, 139, 139),
            Err(RefSigError::ShiftOutOfRange { .. })
        ));
    }

    #[test]
    fn zc_shift_difference_shows_in_cross_correlation() {
        let a = generate_zadoff_chu(1, 139, 20).unwrap();
        let b = generate_zadoff_chu(1, 139, 5).unwrap();
        let best = (0..139)
            .max_by(|&x, &y| {
                periodic_corr(&a, &b, x)
                    .norm()
                    .total_cmp(&periodic_corr(&a, &b, y).norm())
            })
            .unwrap();
        assert_eq!(best, 15);
    }

    /// Direct evaluation of the two LFSR recurrences over plain bit arrays.
    fn gold_reference(c_init: u32, len: usize) -> Vec<u8> {
        let total = len + 1600 + 31;
        let mut x1 = vec![0u8; total];
        let mut x2 = vec![0u8; total];
        x1[0] = 1;
        for (i, b) in x2.iter_mut().take(31).enumerate() {
            *b = ((c_init >> i) & 1) as u8;
        }
        for n in 0..total - 31 {
            x1[n + 31] = x1[n + 3] ^ x1[n];
            x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n];
        }
        (0..len).map(|n| x1[n + 1600] ^ x2[n + 1600]).collect()
    }

    #[test]
    fn gold_matches_direct_recurrence() {
        for seed in [0u32, 1, 0x1234, 0x7FFF_FFFF, 50_000_021] {
            assert_eq!(generate_gold31(seed, 500), gold_reference(seed, 500));
        }
    }

    #[test]
    fn gold_is_deterministic_seed_sensitive_and_balanced() {
        assert_eq!(generate_gold31(99, 300), generate_gold31(99, 300));
        assert_ne!(generate_gold31(99, 100), generate_gold31(100, 100));
        for seed in [1u32, 77, 1 << 20, 0x5555_5555] {
            let bits = generate_gold31(seed, 10_000);
            let ones = bits.iter().filter(|&&b| b == 1).count() as f64 / 1e4;
            assert!((0.45..=0.55).contains(&ones), "seed {seed}: {ones}");
        }
    }

    #[test]
    fn srs_default_dimensions() {
        let num = NumerologyConfig::default();
        let cfg = SrsConfig::for_numerology(&num);
        assert_eq!(cfg.num_subcarriers, 624);
        let srs = generate_srs(&cfg, &num).unwrap();
        assert_eq!(srs.len(), 624);
        assert_eq!(srs.re_indices.len(), 624);
        assert!(srs.symbols.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        assert!(srs
            .re_indices
            .windows(2)
            .all(|w| w[1].subcarrier == w[0].subcarrier + 2));
        assert_eq!(srs.kind, SignalKind::Srs);
    }

    #[test]
    fn srs_comb_from_zero() {
        let num = NumerologyConfig {
            fft_size: 64,
            scs_hz: 1.0,
            sampling_rate_hz: 64.0,
            cp_len: 4,
            occupied_subcarriers: 64,
            center_freq_hz: 0.0,
        };
        let cfg = SrsConfig {
            comb_size: 2,
            num_subcarriers: 8,
            start_re: 0,
            symbol: 0,
            zc_root: 1,
            cyclic_shift: 3,
        };
        let srs = generate_srs(&cfg, &num).unwrap();
        let subs: Vec<usize> = srs.re_indices.iter().map(|r| r.subcarrier).collect();
        assert_eq!(subs, vec![0, 2, 4, 6, 8, 10, 12, 14]);
        let mut bad = cfg.clone();
        bad.start_re = 60;
        assert!(generate_srs(&bad, &num).is_err());
        bad = cfg.clone();
        bad.comb_size = 3;
        assert!(generate_srs(&bad, &num).is_err());
        bad = cfg;
        bad.cyclic_shift = 8;
        assert!(generate_srs(&bad, &num).is_err());
    }

    #[test]
    fn prs_counts_and_qpsk() {
        assert!((qpsk(0, 0) - Complex64::new(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        let num = NumerologyConfig::default();
        let cfg = PrsConfig {
            num_prb: 4,
            num_symbols: 2,
            gold_seed: 1234,
            comb_size: 2,
            re_offset: 0,
            start_re: 600,
            first_symbol: 3,
        };
        let prs = generate_prs(&cfg, &num).unwrap();
        assert_eq!(cfg.res_per_symbol(), 24);
        assert_eq!(prs.len(), 48);
        assert!(prs.symbols.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert_eq!(prs.re_indices[0], ReIndex::new(3, 600));
        assert_eq!(prs.re_indices[24], ReIndex::new(4, 601));
        assert!(prs.re_indices.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn prs_rejects_bad_symbol_count() {
        let num = NumerologyConfig::default();
        let mut cfg = PrsConfig::full_band(&num, 4, 4, 1);
        generate_prs(&cfg, &num).unwrap();
        cfg.num_symbols = 3;
        assert!(matches!(generate_prs(&cfg, &num), Err(RefSigError::Config(_))));
    }

    #[test]
    fn prach_lengths() {
        let num = NumerologyConfig::default();
        for f in PrachFormat::ALL {
            let p = generate_prach(&PrachConfig::centered(&num, f, 1, 0), &num).unwrap();
            let expect = if matches!(f, PrachFormat::F0 | PrachFormat::F1 | PrachFormat::F2 | PrachFormat::F3) {
                839
            } else {
                139
            };
            assert_eq!(p.len(), expect, "{f}");
            assert_eq!(p.kind, SignalKind::Prach);
        }
        assert_eq!("a1".parse::<PrachFormat>().unwrap(), PrachFormat::A1);
        assert!("C1".parse::<PrachFormat>().is_err());
    }

    #[test]
    fn prime_helpers() {
        assert_eq!(largest_prime_at_most(624), Some(619));
        assert_eq!(largest_prime_at_most(139), Some(139));
        assert_eq!(largest_prime_at_most(1), None);
    }
}
