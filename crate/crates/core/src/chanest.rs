//! Comb channel estimation, impulse response, ToA detection and ranging.
//!
//! The uplink chain is: least-squares estimate on the SRS comb, linear
//! interpolation across the comb gaps, inverse DFT to an impulse response,
//! then peak detection with sub-sample refinement. Range is `c * RTT / 2`.
//!
//! Peak-to-noise is measured against the noise floor of the impulse response
//! itself. That floor comes from running the empty-symbol noise samples
//! through the same interpolation and transform, so it tracks any processing
//! gain, including coherent combining. It is measured at delays near zero,
//! where the interpolation shapes the noise the same way as in the search
//! window.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::fixedpoint::IqBufferQ15;
use crate::metrics::{power_of_complex, MetricsError, PowerReport};
use crate::ofdm::{subcarrier_to_bin, NumerologyConfig, Ofdm, OfdmError, ReIndex, ResourceGrid};
use crate::refsig::{generate_zadoff_chu, PrachConfig, PrachFormat, RefSigError, ReferenceSignal};
use crate::simchan::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChanestError {
    #[error("reference symbol at {0} has zero modulus")]
    ZeroReference(ReIndex),
    #[error("interpolation needs at least 2 comb values, got {0}")]
    InsufficientData(usize),
    #[error("comb size must be at least 1")]
    InvalidComb,
    #[error("band of {len} values with stride {stride} from subcarrier {start} exceeds FFT size {fft}")]
    BandTooWide {
        len: usize,
        start: usize,
        stride: usize,
        fft: usize,
    },
    #[error("sequence lengths differ: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("nothing to combine")]
    NothingToCombine,
    #[error("impulse response has no peak")]
    NoPeak,
    #[error("search window {0:?} is empty or outside the impulse response")]
    BadWindow(Range<usize>),
    #[error("noise power must be positive")]
    NoiseFloor,
    #[error("no PRACH preamble above threshold (best {best_db:.1} dB)")]
    NotDetected { best_db: f64 },
    #[error("round-trip time {0} s is negative")]
    NegativeRtt(f64),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error(transparent)]
    RefSig(#[from] RefSigError),
}

/// `h[k] = y[k] / x[k]` on every reference element, computed as
/// `y conj(x) / |x|^2`. Values stay in the grid's Q15 count units.
pub fn ls_estimate(rx_grid: &ResourceGrid, reference: &ReferenceSignal) -> Result<Vec<Complex64>, ChanestError> {
    if reference.symbols.len() != reference.re_indices.len() {
        return Err(ChanestError::ShapeMismatch(
            reference.symbols.len(),
            reference.re_indices.len(),
        ));
    }
    reference
        .symbols
        .iter()
        .zip(&reference.re_indices)
        .map(|(&x, &re)| {
            let m = x.norm_sqr();
            if m < 1e-12 {
                return Err(ChanestError::ZeroReference(re));
            }
            Ok(rx_grid.get(re).to_complex() * x.conj() / m)
        })
        .collect()
}

/// Fills the `comb_size - 1` subcarriers between neighbouring comb values by
/// linear interpolation in the complex plane. Output length is
/// `comb_size * (len - 1) + 1`; nothing is extrapolated past the last comb value.
pub fn interpolate_linear(comb: &[Complex64], comb_size: usize) -> Result<Vec<Complex64>, ChanestError> {
    if comb.len() < 2 {
        return Err(ChanestError::InsufficientData(comb.len()));
    }
    if comb_size == 0 {
        return Err(ChanestError::InvalidComb);
    }
    let mut out = Vec::with_capacity(comb_size * (comb.len() - 1) + 1);
    for pair in comb.windows(2) {
        out.push(pair[0]);
        for j in 1..comb_size {
            let t = j as f64 / comb_size as f64;
            out.push(pair[0] * (1.0 - t) + pair[1] * t);
        }
    }
    out.push(comb[comb.len() - 1]);
    Ok(out)
}

/// Where a frequency-domain sequence sits on the grid: element `i` is at
/// logical subcarrier `start_re + i * stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandLayout {
    pub start_re: usize,
    pub stride: usize,
}

impl BandLayout {
    pub fn contiguous(start_re: usize) -> Self {
        Self { start_re, stride: 1 }
    }
}

/// Unnormalized inverse DFT of length `fft_size` of `freq` placed at its
/// grid positions, zero elsewhere. A flat band of ones peaks at index 0 with
/// magnitude equal to the band width.
pub fn impulse_response(
    freq: &[Complex64],
    layout: BandLayout,
    fft_size: usize,
) -> Result<Vec<Complex64>, ChanestError> {
    let stride = layout.stride.max(1);
    if freq.is_empty() || layout.start_re + (freq.len() - 1) * stride >= fft_size {
        return Err(ChanestError::BandTooWide {
            len: freq.len(),
            start: layout.start_re,
            stride,
            fft: fft_size,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (i, &z) in freq.iter().enumerate() {
        buf[subcarrier_to_bin(layout.start_re + i * stride, fft_size)] = z;
    }
    FftPlanner::new().plan_fft_inverse(fft_size).process(&mut buf);
    Ok(buf)
}

/// Element-wise complex mean of equally long estimates.
pub fn combine_coherent(estimates: &[Vec<Complex64>]) -> Result<Vec<Complex64>, ChanestError> {
    let first = estimates.first().ok_or(ChanestError::NothingToCombine)?;
    let mut acc = first.clone();
    for e in &estimates[1..] {
        if e.len() != acc.len() {
            return Err(ChanestError::ShapeMismatch(acc.len(), e.len()));
        }
        for (a, &z) in acc.iter_mut().zip(e) {
            *a += z;
        }
    }
    let m = estimates.len() as f64;
    acc.iter_mut().for_each(|z| *z /= m);
    Ok(acc)
}

pub fn rtt_to_range(rtt_seconds: f64) -> Result<f64, ChanestError> {
    if !(rtt_seconds >= 0.0) {
        return Err(ChanestError::NegativeRtt(rtt_seconds));
    }
    Ok(SPEED_OF_LIGHT * rtt_seconds / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakMode {
    /// Largest `|h|^2` in the search window.
    Strongest,
    /// First local maximum whose peak-to-noise clears the threshold.
    FirstAboveThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// Three-point parabola through `|h|^2` at the peak sample and its neighbours.
    Parabolic,
    /// The band-limited impulse response is re-evaluated on a grid `1/factor`
    /// samples apart around the peak, and the parabola is fitted there.
    Oversampled(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToaResult {
    pub peak_index: usize,
    pub frac_offset: f64,
    pub toa_seconds: f64,
    pub peak_to_noise_db: f64,
    pub reliable: bool,
}

impl ToaResult {
    pub fn toa_samples(&self) -> f64 {
        self.peak_index as f64 + self.frac_offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToaDetector {
    pub search_window: Range<usize>,
    pub threshold_db: f64,
    pub mode: PeakMode,
    pub refinement: Refinement,
}

impl ToaDetector {
    pub const DEFAULT_THRESHOLD_DB: f64 = 10.0;

    /// Window `[0, CP)`: delays beyond the cyclic prefix are ambiguous, and
    /// the comb-2 image at `K/2` is excluded.
    pub fn for_numerology(num: &NumerologyConfig) -> Self {
        Self {
            search_window: 0..num.cp_len,
            threshold_db: Self::DEFAULT_THRESHOLD_DB,
            mode: PeakMode::Strongest,
            refinement: Refinement::Oversampled(16),
        }
    }

    pub fn detect(
        &self,
        impulse: &[Complex64],
        noise: &PowerReport,
        num: &NumerologyConfig,
    ) -> Result<ToaResult, ChanestError> {
        let k = impulse.len();
        let w = self.search_window.clone();
        if w.is_empty() || w.end > k {
            return Err(ChanestError::BadWindow(w));
        }
        if !(noise.p_linear > 0.0) {
            return Err(ChanestError::NoiseFloor);
        }
        let power: Vec<f64> = impulse.iter().map(|z| z.norm_sqr()).collect();
        if power[w.clone()].iter().all(|&p| p == 0.0) {
            return Err(ChanestError::NoPeak);
        }
        let ptn = |p: f64| 10.0 * (p / noise.p_linear).log10();
        let strongest = || {
            w.clone()
                .max_by(|&a, &b| power[a].total_cmp(&power[b]).then(b.cmp(&a)))
                .expect("window is not empty")
        };
        let peak = match self.mode {
            PeakMode::Strongest => strongest(),
            PeakMode::FirstAboveThreshold => match w.clone().find(|&n| ptn(power[n]) >= self.threshold_db) {
                Some(mut n) => {
                    while n + 1 < w.end && power[n + 1] > power[n] {
                        n += 1;
                    }
                    n
                }
                None => strongest(),
            },
        };
        let offset = match self.refinement {
            Refinement::Parabolic => parabolic_vertex(
                power[(peak + k - 1) % k],
                power[peak],
                power[(peak + 1) % k],
            ),
            Refinement::Oversampled(factor) => oversampled_offset(impulse, peak, factor.max(1)),
        };
        // Keep the fractional part in [-0.5, 0.5) relative to the nearest sample.
        let refined = peak as f64 + offset;
        let peak_index = refined.round().rem_euclid(k as f64) as usize;
        let frac_offset = refined - refined.round();
        let peak_to_noise_db = ptn(power[peak]);
        Ok(ToaResult {
            peak_index,
            frac_offset,
            toa_seconds: (peak_index as f64 + frac_offset) / num.sampling_rate_hz,
            peak_to_noise_db,
            reliable: peak_to_noise_db >= self.threshold_db,
        })
    }
}

/// Vertex of the parabola through `(-1, a), (0, b), (1, c)`, clamped to ±0.5.
fn parabolic_vertex(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

fn oversampled_offset(impulse: &[Complex64], peak: usize, factor: usize) -> f64 {
    let k = impulse.len();
    let mut spec = impulse.to_vec();
    FftPlanner::new().plan_fft_forward(k).process(&mut spec);
    let band: Vec<(f64, Complex64)> = spec
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm_sqr() > 0.0)
        .map(|(b, &z)| {
            let f = if b < k.div_ceil(2) { b as f64 } else { b as f64 - k as f64 };
            (f, z / k as f64)
        })
        .collect();
    let eval = |t: f64| -> f64 {
        band.iter()
            .map(|&(f, z)| z * Complex64::from_polar(1.0, 2.0 * PI * f * t / k as f64))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let l = factor as isize;
    let fine: Vec<f64> = (-l..=l).map(|m| eval(peak as f64 + m as f64 / factor as f64)).collect();
    let j = (1..fine.len() - 1)
        .max_by(|&a, &b| fine[a].total_cmp(&fine[b]))
        .unwrap_or(l as usize);
    let vertex = parabolic_vertex(fine[j - 1], fine[j], fine[j + 1]);
    (j as f64 - l as f64 + vertex) / factor as f64
}

/// [`ToaDetector::for_numerology`] applied to `impulse`.
pub fn detect_toa(
    impulse: &[Complex64],
    noise: &PowerReport,
    cfg: &NumerologyConfig,
) -> Result<ToaResult, ChanestError> {
    ToaDetector::for_numerology(cfg).detect(impulse, noise, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpulseSource {
    /// Impulse response of the linearly interpolated full band.
    Interpolated,
    /// Impulse response of the comb values alone (aliased at `K / comb`).
    Comb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub fft_size: usize,
    pub comb_size: usize,
    /// Logical subcarrier of the first comb value.
    pub start_re: usize,
    pub source: ImpulseSource,
    /// The impulse noise floor is measured over delays within this many
    /// samples of zero. Interpolation shapes the noise in delay, so the floor
    /// must come from the delays the detector searches; 0 means all `K`.
    pub noise_halfwidth: usize,
}

impl EstimatorConfig {
    pub fn for_srs(srs: &crate::refsig::SrsConfig, num: &NumerologyConfig) -> Self {
        Self {
            fft_size: num.fft_size,
            comb_size: srs.comb_size,
            start_re: srs.start_re,
            source: ImpulseSource::Interpolated,
            noise_halfwidth: num.cp_len,
        }
    }

    fn noise_floor(&self, noise_impulse: &[Complex64]) -> Result<PowerReport, ChanestError> {
        let k = noise_impulse.len();
        let w = self.noise_halfwidth;
        if w == 0 || 2 * w >= k {
            return Ok(power_of_complex(noise_impulse)?);
        }
        let near: Vec<Complex64> = noise_impulse[..w].iter().chain(&noise_impulse[k - w..]).copied().collect();
        Ok(power_of_complex(&near)?)
    }

    fn impulse_of(&self, comb: &[Complex64], interp: &[Complex64]) -> Result<Vec<Complex64>, ChanestError> {
        match self.source {
            ImpulseSource::Interpolated => {
                impulse_response(interp, BandLayout::contiguous(self.start_re), self.fft_size)
            }
            ImpulseSource::Comb => impulse_response(
                comb,
                BandLayout {
                    start_re: self.start_re,
                    stride: self.comb_size,
                },
                self.fft_size,
            ),
        }
    }
}

/// One SRS channel estimate with its noise reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// LS estimates on the comb elements.
    pub freq_comb: Vec<Complex64>,
    /// Comb estimates with the gaps linearly interpolated.
    pub freq_interp: Vec<Complex64>,
    /// Length-`K` impulse response.
    pub impulse: Vec<Complex64>,
    /// Empty-symbol samples on the comb elements.
    pub noise_comb: Vec<Complex64>,
    /// Per-RE noise power of the empty symbol.
    pub noise_ref: PowerReport,
    /// Noise floor of `impulse` near zero delay.
    pub impulse_noise: PowerReport,
}

impl ChannelEstimate {
    /// Builds an estimate from comb LS values and same-position noise samples.
    pub fn from_comb(
        freq_comb: Vec<Complex64>,
        noise_comb: Vec<Complex64>,
        cfg: &EstimatorConfig,
    ) -> Result<Self, ChanestError> {
        if noise_comb.len() != freq_comb.len() {
            return Err(ChanestError::ShapeMismatch(freq_comb.len(), noise_comb.len()));
        }
        let freq_interp = interpolate_linear(&freq_comb, cfg.comb_size)?;
        let impulse = cfg.impulse_of(&freq_comb, &freq_interp)?;
        let noise_interp = interpolate_linear(&noise_comb, cfg.comb_size)?;
        let noise_impulse = cfg.impulse_of(&noise_comb, &noise_interp)?;
        Ok(Self {
            noise_ref: power_of_complex(&noise_comb)?,
            impulse_noise: cfg.noise_floor(&noise_impulse)?,
            freq_comb,
            freq_interp,
            impulse,
            noise_comb,
        })
    }

    /// Coherent average of several estimates, noise references included.
    pub fn combine(estimates: &[ChannelEstimate], cfg: &EstimatorConfig) -> Result<Self, ChanestError> {
        let combs: Vec<Vec<Complex64>> = estimates.iter().map(|e| e.freq_comb.clone()).collect();
        let noises: Vec<Vec<Complex64>> = estimates.iter().map(|e| e.noise_comb.clone()).collect();
        Self::from_comb(combine_coherent(&combs)?, combine_coherent(&noises)?, cfg)
    }
}

/// LS estimate of `srs` in `rx_grid`, with the noise reference taken from the
/// same subcarriers of `noise_symbol`.
pub fn estimate_channel(
    rx_grid: &ResourceGrid,
    srs: &ReferenceSignal,
    noise_symbol: usize,
    cfg: &EstimatorConfig,
) -> Result<ChannelEstimate, ChanestError> {
    let comb = ls_estimate(rx_grid, srs)?;
    let noise_ref = ReferenceSignal {
        symbols: srs.symbols.clone(),
        re_indices: srs
            .re_indices
            .iter()
            .map(|re| ReIndex::new(noise_symbol, re.subcarrier))
            .collect(),
        kind: srs.kind,
    };
    let noise = ls_estimate(rx_grid, &noise_ref)?;
    ChannelEstimate::from_comb(comb, noise, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeEstimate {
    pub toa: ToaResult,
    /// `c * max(ToA - bias, 0) / 2`.
    pub range_m: f64,
}

/// ToA of `est` converted to range after removing a fixed timing bias.
pub fn estimate_range(
    est: &ChannelEstimate,
    detector: &ToaDetector,
    num: &NumerologyConfig,
    bias_samples: f64,
) -> Result<RangeEstimate, ChanestError> {
    let toa = detector.detect(&est.impulse, &est.impulse_noise, num)?;
    // A noisy peak at zero delay can refine to a slightly negative time.
    let rtt = ((toa.toa_samples() - bias_samples) / num.sampling_rate_hz).max(0.0);
    Ok(RangeEstimate {
        range_m: rtt_to_range(rtt)?,
        toa,
    })
}

/// Candidate preambles and decision parameters for PRACH detection.
#[derive(Debug, Clone, PartialEq)]
pub struct PrachDetectorConfig {
    pub format: PrachFormat,
    /// `(root, cyclic_shift)` per preamble id.
    pub candidates: Vec<(u32, u32)>,
    pub start_re: usize,
    /// Largest timing offset searched, samples (exclusive).
    pub max_timing: usize,
    /// Peak over mean of the correlation profile.
    pub threshold_db: f64,
}

impl PrachDetectorConfig {
    pub const DEFAULT_THRESHOLD_DB: f64 = 13.0;

    pub fn for_preamble(cfg: &PrachConfig, num: &NumerologyConfig, candidates: Vec<(u32, u32)>) -> Self {
        Self {
            format: cfg.format,
            candidates,
            start_re: cfg.start_re,
            max_timing: num.cp_len,
            threshold_db: Self::DEFAULT_THRESHOLD_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrachDetection {
    pub preamble_id: usize,
    pub timing_samples: usize,
    pub metric_db: f64,
}

/// Frequency-domain correlation of the first received symbol against every
/// candidate preamble. The best candidate's delay profile peak gives the
/// coarse timing.
pub fn detect_prach(
    rx: &IqBufferQ15,
    cfg: &PrachDetectorConfig,
    num: &NumerologyConfig,
) -> Result<PrachDetection, ChanestError> {
    let need = num.symbol_len();
    if rx.len() < need {
        return Err(OfdmError::InsufficientSamples { need, have: rx.len() }.into());
    }
    if cfg.max_timing == 0 || cfg.max_timing > num.fft_size {
        return Err(ChanestError::BadWindow(0..cfg.max_timing));
    }
    let ofdm = Ofdm::new(num)?;
    let body: Vec<Complex64> = rx.samples()[num.cp_len..num.cp_len + num.fft_size]
        .iter()
        .map(|s| s.to_complex())
        .collect();
    let row = ofdm.time_to_symbol(&body);
    let len = cfg.format.sequence_length() as usize;
    if cfg.start_re + len > num.fft_size {
        return Err(ChanestError::BandTooWide {
            len,
            start: cfg.start_re,
            stride: 1,
            fft: num.fft_size,
        });
    }
    let y = &row[cfg.start_re..cfg.start_re + len];
    let mut best: Option<PrachDetection> = None;
    let mut best_peak = f64::NEG_INFINITY;
    for (id, &(root, shift)) in cfg.candidates.iter().enumerate() {
        let p = generate_zadoff_chu(root, len as u32, shift)?;
        let corr: Vec<Complex64> = y.iter().zip(&p).map(|(&a, b)| a * b.conj()).collect();
        let profile = impulse_response(&corr, BandLayout::contiguous(cfg.start_re), num.fft_size)?;
        let power: Vec<f64> = profile.iter().map(|z| z.norm_sqr()).collect();
        let mean = power.iter().sum::<f64>() / power.len() as f64;
        let (t, &peak) = power[..cfg.max_timing]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("window is not empty");
        if peak > best_peak && mean > 0.0 {
            best_peak = peak;
            best = Some(PrachDetection {
                preamble_id: id,
                timing_samples: t,
                metric_db: 10.0 * (peak / mean).log10(),
            });
        }
    }
    match best {
        Some(d) if d.metric_db >= cfg.threshold_db => Ok(d),
        Some(d) => Err(ChanestError::NotDetected { best_db: d.metric_db }),
        None => Err(ChanestError::NotDetected {
            best_db: f64::NEG_INFINITY,
        }),
    }
}
