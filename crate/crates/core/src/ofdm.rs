//! Resource grid and CP-OFDM modulation over Q15 sample streams.
//!
//! Grid columns use DC-centered logical indexing: subcarrier `k` of a
//! `K`-wide grid sits at frequency offset `k - K/2` subcarriers, so `K/2` is
//! DC. The FFT bin of subcarrier `k` is `(k - K/2) mod K`; negative
//! frequencies land in the upper half of the transform. Only the centered
//! `occupied_subcarriers` columns may carry energy.
//!
//! Both transforms are scaled by `1/sqrt(K)`, so time-domain and grid energy
//! agree (`sum |x|^2 = sum |X|^2`) and a grid survives a modulate/demodulate
//! round trip to within one LSB. Transform arithmetic is double precision;
//! quantization back to Q15 rounds to nearest, and a sample outside the
//! int16 range is an error rather than being clipped.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::fixedpoint::{rescale, unit_to_q15, Amplitude, FixedPointError, IqBufferQ15, SampleQ15};
use crate::refsig::ReferenceSignal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OfdmError {
    #[error("invalid numerology: {0}")]
    InvalidNumerology(String),
    #[error("resource element {0} is outside the occupied band")]
    OutOfBand(ReIndex),
    #[error("resource element {0} is already occupied")]
    MappingConflict(ReIndex),
    #[error("signal has {symbols} symbols but {indices} resource elements")]
    ShapeMismatch { symbols: usize, indices: usize },
    #[error("grid width {grid} does not match FFT size {fft}")]
    GridWidth { grid: usize, fft: usize },
    #[error("need {need} samples, got {have}")]
    InsufficientSamples { need: usize, have: usize },
    #[error("txdataF length {len} bytes is not a whole number of {row_bytes}-byte symbols")]
    TxdataLength { len: usize, row_bytes: usize },
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
}

/// OFDM dimensioning.
#[derive(Debug, Clone, PartialEq)]
pub struct NumerologyConfig {
    /// FFT size `K`.
    pub fft_size: usize,
    pub scs_hz: f64,
    pub sampling_rate_hz: f64,
    /// Cyclic prefix length in samples, applied to every symbol.
    pub cp_len: usize,
    pub occupied_subcarriers: usize,
    /// Carrier frequency; informational only.
    pub center_freq_hz: f64,
}

impl NumerologyConfig {
    /// 38.16 MHz carrier at 30 kHz spacing, 46.08 MHz sampling, K = 1536,
    /// CP 132, centered at 3.69 GHz.
    pub fn nr_38m16() -> Self {
        Self {
            fft_size: 1536,
            scs_hz: 30e3,
            sampling_rate_hz: 46.08e6,
            cp_len: 132,
            occupied_subcarriers: 1272,
            center_freq_hz: 3.69e9,
        }
    }

    pub fn validate(&self) -> Result<(), OfdmError> {
        let bad = |m: String| Err(OfdmError::InvalidNumerology(m));
        if self.fft_size < 2 || !self.fft_size.is_multiple_of(2) {
            return bad(format!("fft_size {} must be even and >= 2", self.fft_size));
        }
        if self.occupied_subcarriers == 0 || self.occupied_subcarriers > self.fft_size {
            return bad(format!(
                "occupied_subcarriers {} must be in 1..={}",
                self.occupied_subcarriers, self.fft_size
            ));
        }
        if self.cp_len >= self.fft_size {
            return bad(format!("cp_len {} must be below fft_size", self.cp_len));
        }
        if !(self.scs_hz > 0.0) || !(self.sampling_rate_hz > 0.0) {
            return bad("scs_hz and sampling_rate_hz must be positive".into());
        }
        let expected = self.fft_size as f64 * self.scs_hz;
        if (expected - self.sampling_rate_hz).abs() > 1e-6 * self.sampling_rate_hz {
            return bad(format!(
                "sampling_rate_hz {} != fft_size * scs_hz = {}",
                self.sampling_rate_hz, expected
            ));
        }
        Ok(())
    }

    /// First occupied logical subcarrier.
    pub fn band_start(&self) -> usize {
        self.fft_size / 2 - self.occupied_subcarriers / 2
    }

    /// One past the last occupied logical subcarrier.
    pub fn band_end(&self) -> usize {
        self.band_start() + self.occupied_subcarriers
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.occupied_subcarriers as f64 * self.scs_hz
    }
}

impl Default for NumerologyConfig {
    fn default() -> Self {
        Self::nr_38m16()
    }
}

/// FFT bin holding logical subcarrier `k` of a `fft_size`-wide grid.
pub fn subcarrier_to_bin(k: usize, fft_size: usize) -> usize {
    (k + fft_size - fft_size / 2) % fft_size
}

/// Position of one resource element: OFDM symbol and logical subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReIndex {
    pub symbol: usize,
    pub subcarrier: usize,
}

impl ReIndex {
    pub const fn new(symbol: usize, subcarrier: usize) -> Self {
        Self { symbol, subcarrier }
    }
}

impl fmt::Display for ReIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(symbol {}, subcarrier {})", self.symbol, self.subcarrier)
    }
}

/// Frequency-domain Q15 grid of `num_symbols x fft_size` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceGrid {
    fft_size: usize,
    occupied: usize,
    num_symbols: usize,
    cells: Vec<SampleQ15>,
}

impl ResourceGrid {
    pub fn new(num: &NumerologyConfig, num_symbols: usize) -> Self {
        Self::with_dims(num.fft_size, num.occupied_subcarriers, num_symbols)
    }

    pub fn with_dims(fft_size: usize, occupied: usize, num_symbols: usize) -> Self {
        Self {
            fft_size,
            occupied: occupied.min(fft_size),
            num_symbols,
            cells: vec![SampleQ15::ZERO; fft_size * num_symbols],
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn band(&self) -> std::ops::Range<usize> {
        let start = self.fft_size / 2 - self.occupied / 2;
        start..start + self.occupied
    }

    pub fn contains(&self, re: ReIndex) -> bool {
        re.symbol < self.num_symbols && self.band().contains(&re.subcarrier)
    }

    /// Cell value; out-of-grid positions read as zero.
    pub fn get(&self, re: ReIndex) -> SampleQ15 {
        if re.symbol < self.num_symbols && re.subcarrier < self.fft_size {
            self.cells[re.symbol * self.fft_size + re.subcarrier]
        } else {
            SampleQ15::ZERO
        }
    }

    pub fn set(&mut self, re: ReIndex, value: SampleQ15) -> Result<(), OfdmError> {
        if !self.contains(re) {
            return Err(OfdmError::OutOfBand(re));
        }
        self.cells[re.symbol * self.fft_size + re.subcarrier] = value;
        Ok(())
    }

    pub fn symbol(&self, symbol: usize) -> &[SampleQ15] {
        &self.cells[symbol * self.fft_size..(symbol + 1) * self.fft_size]
    }

    pub fn cells(&self) -> &[SampleQ15] {
        &self.cells
    }

    pub fn values_at(&self, indices: &[ReIndex]) -> Vec<SampleQ15> {
        indices.iter().map(|&re| self.get(re)).collect()
    }

    /// Quantizes each symbol of `sig` to Q15, rescales it by `amp` and writes
    /// it to its resource element.
    pub fn map_signal(&mut self, sig: &ReferenceSignal, amp: Amplitude) -> Result<(), OfdmError> {
        if sig.symbols.len() != sig.re_indices.len() {
            return Err(OfdmError::ShapeMismatch {
                symbols: sig.symbols.len(),
                indices: sig.re_indices.len(),
            });
        }
        let mut staged = Vec::with_capacity(sig.symbols.len());
        for (&z, &re) in sig.symbols.iter().zip(&sig.re_indices) {
            if !self.contains(re) {
                return Err(OfdmError::OutOfBand(re));
            }
            if !self.get(re).is_zero() {
                return Err(OfdmError::MappingConflict(re));
            }
            let i = rescale(unit_to_q15(z.re)?, amp);
            let q = rescale(unit_to_q15(z.im)?, amp);
            staged.push((re, SampleQ15::new(i, q)));
        }
        for (re, v) in staged {
            self.cells[re.symbol * self.fft_size + re.subcarrier] = v;
        }
        Ok(())
    }

    fn zero_guard_bands(&mut self) {
        let band = self.band();
        for row in self.cells.chunks_mut(self.fft_size) {
            for (k, c) in row.iter_mut().enumerate() {
                if !band.contains(&k) {
                    *c = SampleQ15::ZERO;
                }
            }
        }
    }
}

/// Pure form of [`ResourceGrid::map_signal`].
pub fn grid_map(
    grid: &ResourceGrid,
    sig: &ReferenceSignal,
    amp: Amplitude,
) -> Result<ResourceGrid, OfdmError> {
    let mut out = grid.clone();
    out.map_signal(sig, amp)?;
    Ok(out)
}

/// CP-OFDM modulator/demodulator with cached FFT plans.
#[derive(Clone)]
pub struct Ofdm {
    num: NumerologyConfig,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ofdm").field("num", &self.num).finish()
    }
}

impl Ofdm {
    pub fn new(num: &NumerologyConfig) -> Result<Self, OfdmError> {
        num.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            num: num.clone(),
            inverse: planner.plan_fft_inverse(num.fft_size),
            forward: planner.plan_fft_forward(num.fft_size),
            scale: 1.0 / (num.fft_size as f64).sqrt(),
        })
    }

    pub fn numerology(&self) -> &NumerologyConfig {
        &self.num
    }

    /// Time-domain samples of one grid row, CP excluded, in Q15 counts.
    pub fn symbol_to_time(&self, row: &[SampleQ15]) -> Vec<Complex64> {
        let k = self.num.fft_size;
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for (sc, v) in row.iter().enumerate() {
            buf[subcarrier_to_bin(sc, k)] = v.to_complex();
        }
        self.inverse.process(&mut buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
        buf
    }

    /// Grid row (logical subcarrier order) of one CP-stripped symbol body.
    pub fn time_to_symbol(&self, body: &[Complex64]) -> Vec<Complex64> {
        let k = self.num.fft_size;
        let mut buf = body.to_vec();
        self.forward.process(&mut buf);
        (0..k)
            .map(|sc| buf[subcarrier_to_bin(sc, k)] * self.scale)
            .collect()
    }

    /// Inverse transform of each symbol with the last `cp_len` samples
    /// prepended as cyclic prefix.
    pub fn modulate(&self, grid: &ResourceGrid) -> Result<IqBufferQ15, OfdmError> {
        if grid.fft_size() != self.num.fft_size {
            return Err(OfdmError::GridWidth {
                grid: grid.fft_size(),
                fft: self.num.fft_size,
            });
        }
        let k = self.num.fft_size;
        let cp = self.num.cp_len;
        let mut out = Vec::with_capacity(grid.num_symbols() * (k + cp));
        for s in 0..grid.num_symbols() {
            let body = IqBufferQ15::from_complex_round(&self.symbol_to_time(grid.symbol(s)))?;
            out.extend_from_slice(&body.samples()[k - cp..]);
            out.extend_from_slice(body.samples());
        }
        Ok(IqBufferQ15::new(out))
    }

    /// Strips each cyclic prefix and transforms `num_symbols` symbols back to
    /// a grid. Guard-band cells are zeroed.
    pub fn demodulate(
        &self,
        samples: &IqBufferQ15,
        num_symbols: usize,
    ) -> Result<ResourceGrid, OfdmError> {
        let k = self.num.fft_size;
        let sym_len = self.num.symbol_len();
        let need = num_symbols * sym_len;
        if samples.len() < need {
            return Err(OfdmError::InsufficientSamples {
                need,
                have: samples.len(),
            });
        }
        let mut grid = ResourceGrid::new(&self.num, num_symbols);
        for s in 0..num_symbols {
            let start = s * sym_len + self.num.cp_len;
            let body: Vec<Complex64> = samples.samples()[start..start + k]
                .iter()
                .map(|v| v.to_complex())
                .collect();
            let row = self.time_to_symbol(&body);
            for (sc, z) in row.into_iter().enumerate() {
                grid.cells[s * k + sc] = SampleQ15::from_complex_round(z)?;
            }
        }
        grid.zero_guard_bands();
        Ok(grid)
    }
}

pub fn modulate(grid: &ResourceGrid, cfg: &NumerologyConfig) -> Result<IqBufferQ15, OfdmError> {
    Ofdm::new(cfg)?.modulate(grid)
}

pub fn demodulate(
    samples: &IqBufferQ15,
    cfg: &NumerologyConfig,
    num_symbols: usize,
) -> Result<ResourceGrid, OfdmError> {
    Ofdm::new(cfg)?.demodulate(samples, num_symbols)
}

/// `txdataF` layout: symbol-major, `I0 Q0 I1 Q1 ...` little-endian int16.
pub fn serialize_txdataf(grid: &ResourceGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.cells.len() * 4);
    for c in &grid.cells {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn deserialize_txdataf(
    bytes: &[u8],
    fft_size: usize,
    occupied: usize,
) -> Result<ResourceGrid, OfdmError> {
    let row_bytes = fft_size * 4;
    if fft_size == 0 || !bytes.len().is_multiple_of(row_bytes) {
        return Err(OfdmError::TxdataLength {
            len: bytes.len(),
            row_bytes,
        });
    }
    let cells = IqBufferQ15::from_le_bytes(bytes)
        .map_err(|_| OfdmError::TxdataLength {
            len: bytes.len(),
            row_bytes,
        })?
        .into_samples();
    Ok(ResourceGrid {
        fft_size,
        occupied: occupied.min(fft_size),
        num_symbols: cells.len() / fft_size,
        cells,
    })
}
