//! Deterministic baseband channel: propagation delay, multipath, AWGN, and an
//! RTT exchange that stands in for an over-the-air measurement.
//!
//! Randomness comes from [`SplitMix64`] with Box-Muller Gaussian sampling, so
//! a scenario and seed reproduce bit-identical output on every platform.
//!
//! Timing model: the UE is perfectly synchronized to the downlink, so the
//! uplink SRS arrives at the gNB delayed by the full round trip `2 d / c`.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::fixedpoint::{Amplitude, FixedPointError, IqBufferQ15};
use crate::metrics::{power_per_re, MetricsError};
use crate::ofdm::{NumerologyConfig, Ofdm, OfdmError, ResourceGrid};
use crate::refsig::{generate_srs, RefSigError, ReferenceSignal, SrsConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-length of the fractional-delay filter; the filter has `2 * 15 + 1` taps.
pub const SINC_HALF_TAPS: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("delay {delay} samples is invalid for a {len}-sample buffer")]
    DelayRange { delay: f64, len: usize },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("round-trip delay {delay:.3} samples exceeds the cyclic prefix ({cp} samples)")]
    RangeAmbiguity { delay: f64, cp: usize },
    #[error("signal power must be positive, got {0}")]
    SignalPower(f64),
    #[error(transparent)]
    RefSig(#[from] RefSigError),
    #[error(transparent)]
    Ofdm(#[from] OfdmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
}

/// SplitMix64 generator.
///
/// State advances by the golden-ratio increment `0x9E3779B97F4A7C15`; each
/// output is the state passed through the mixer
/// `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[-bound, bound]` (modulo bias is negligible for small bounds).
    pub fn uniform_i16(&mut self, bound: i16) -> i16 {
        let span = 2 * u64::from(bound.unsigned_abs()) + 1;
        ((self.next_u64() % span) as i64 - i64::from(bound.abs())) as i16
    }
}

/// Seed for an independent stream `stream` derived from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::new(seed ^ stream.wrapping_mul(SplitMix64::GAMMA)).next_u64()
}

/// Standard normal variates by the Box-Muller transform, two per draw pair.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(rng: SplitMix64) -> Self {
        Self { rng, spare: None }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(SplitMix64::new(seed))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.rng.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Circular complex Gaussian with `E|z|^2 = variance`.
    pub fn complex(&mut self, variance: f64) -> Complex64 {
        let s = (variance / 2.0).sqrt();
        Complex64::new(s * self.next(), s * self.next())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMethod {
    /// Integer shift plus a 31-tap Hann-windowed sinc for the fractional part.
    WindowedSinc,
    /// Circular delay of the whole buffer as a linear phase ramp in frequency.
    PhaseRamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delayed {
    pub samples: Vec<Complex64>,
    /// Indices unaffected by the buffer edges (zero-fill and filter transients).
    pub valid: Range<usize>,
}

fn windowed_sinc(t: f64) -> f64 {
    let half = SINC_HALF_TAPS as f64 + 1.0;
    if t.abs() >= half {
        return 0.0;
    }
    let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
    sinc * (0.5 + 0.5 * (PI * t / half).cos())
}

/// Fractional-delay taps `h[m]`, `m = -15..=15`, for `y[n] = sum_m h[m] x[n - m]`.
pub fn sinc_taps(frac: f64) -> [f64; 2 * SINC_HALF_TAPS + 1] {
    let mut h = [0.0; 2 * SINC_HALF_TAPS + 1];
    for (i, tap) in h.iter_mut().enumerate() {
        let m = i as f64 - SINC_HALF_TAPS as f64;
        *tap = windowed_sinc(m - frac);
    }
    h
}

/// Delays `samples` by `delay` samples (`y[n] = x[n - delay]`).
pub fn apply_delay(samples: &[Complex64], delay: f64, method: DelayMethod) -> Result<Delayed, SimError> {
    let len = samples.len();
    if !(delay >= 0.0) || !delay.is_finite() || delay >= len.max(1) as f64 {
        return Err(SimError::DelayRange { delay, len });
    }
    match method {
        DelayMethod::WindowedSinc => Ok(sinc_delay(samples, delay)),
        DelayMethod::PhaseRamp => Ok(Delayed {
            samples: phase_ramp_delay(samples, delay),
            valid: 0..len,
        }),
    }
}

fn sinc_delay(samples: &[Complex64], delay: f64) -> Delayed {
    let len = samples.len();
    let whole = delay.floor() as usize;
    let frac = delay - whole as f64;
    let zero = Complex64::new(0.0, 0.0);
    if frac == 0.0 {
        let mut out = vec![zero; len];
        out[whole..].copy_from_slice(&samples[..len - whole]);
        return Delayed {
            samples: out,
            valid: whole..len,
        };
    }
    let h = sinc_taps(frac);
    let half = SINC_HALF_TAPS as isize;
    let out = (0..len as isize)
        .map(|n| {
            let mut acc = zero;
            for (i, &tap) in h.iter().enumerate() {
                let src = n - whole as isize - (i as isize - half);
                if (0..len as isize).contains(&src) {
                    acc += samples[src as usize] * tap;
                }
            }
            acc
        })
        .collect();
    let lo = (whole + SINC_HALF_TAPS + 1).min(len);
    let hi = len.saturating_sub(SINC_HALF_TAPS).max(lo);
    Delayed { samples: out, valid: lo..hi }
}

fn phase_ramp_delay(samples: &[Complex64], delay: f64) -> Vec<Complex64> {
    let len = samples.len();
    let mut planner = FftPlanner::new();
    let mut buf = samples.to_vec();
    planner.plan_fft_forward(len).process(&mut buf);
    for (b, z) in buf.iter_mut().enumerate() {
        let f = if b < len.div_ceil(2) { b as f64 } else { b as f64 - len as f64 };
        *z *= Complex64::from_polar(1.0 / len as f64, -2.0 * PI * f * delay / len as f64);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf
}

/// Adds complex AWGN with per-sample variance `signal_power / 10^(snr_db/10)`.
/// An infinite SNR returns the input unchanged.
pub fn apply_awgn(
    samples: &[Complex64],
    snr_db: f64,
    signal_power: f64,
    seed: u64,
) -> Result<Vec<Complex64>, SimError> {
    if !(signal_power > 0.0) {
        return Err(SimError::SignalPower(signal_power));
    }
    if snr_db == f64::INFINITY {
        return Ok(samples.to_vec());
    }
    let variance = signal_power / 10f64.powf(snr_db / 10.0);
    let mut g = GaussianSource::from_seed(seed);
    Ok(samples.iter().map(|&z| z + g.complex(variance)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Delay relative to the bulk delay, samples.
    pub delay_samples: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// Bulk delay applied to every tap, samples.
    pub delay_samples: f64,
    pub taps: Vec<Tap>,
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelSpec {
    /// Single unit-gain path.
    pub fn line_of_sight(delay_samples: f64, snr_db: f64, seed: u64) -> Self {
        Self {
            delay_samples,
            taps: vec![Tap {
                delay_samples: 0.0,
                gain: Complex64::new(1.0, 0.0),
            }],
            snr_db,
            seed,
        }
    }

    /// Checks taps against a `max_delay` (typically `K - CP`).
    pub fn validate(&self, max_delay: f64) -> Result<(), SimError> {
        if self.taps.is_empty() {
            return Err(SimError::Scenario("channel needs at least one tap".into()));
        }
        if !(self.delay_samples >= 0.0) {
            return Err(SimError::Scenario(format!("bulk delay {} is negative", self.delay_samples)));
        }
        for t in &self.taps {
            let d = self.delay_samples + t.delay_samples;
            if !(t.delay_samples >= 0.0) || d >= max_delay {
                return Err(SimError::Scenario(format!(
                    "tap delay {d} outside [0, {max_delay})"
                )));
            }
        }
        Ok(())
    }
}

/// Multipath sum of delayed copies plus AWGN referenced to `signal_power`.
pub fn apply_channel(
    samples: &[Complex64],
    spec: &ChannelSpec,
    signal_power: f64,
) -> Result<Vec<Complex64>, SimError> {
    let mut out = vec![Complex64::new(0.0, 0.0); samples.len()];
    for tap in &spec.taps {
        let delayed = apply_delay(
            samples,
            spec.delay_samples + tap.delay_samples,
            DelayMethod::WindowedSinc,
        )?;
        for (o, d) in out.iter_mut().zip(delayed.samples) {
            *o += d * tap.gain;
        }
    }
    apply_awgn(&out, spec.snr_db, signal_power, spec.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttScenario {
    /// gNB to UE distance; 0 is a loopback.
    pub distance_m: f64,
    pub numerology: NumerologyConfig,
    pub srs: SrsConfig,
    pub amp: Amplitude,
    /// Per-RE SNR of the SRS at the gNB.
    pub snr_db: f64,
    /// Path attenuation applied to the received SRS. The noise variance is
    /// set from the attenuated power, so `snr_db` stays the effective SNR.
    pub attenuation_db: f64,
    pub num_snapshots: usize,
    pub seed: u64,
    /// Constant hardware timing bias added to the round trip, samples.
    pub bias_samples: f64,
    /// Extra paths relative to the direct path.
    pub multipath: Vec<Tap>,
}

impl RttScenario {
    pub fn new(distance_m: f64, snr_db: f64, num_snapshots: usize, seed: u64) -> Self {
        let numerology = NumerologyConfig::default();
        let srs = SrsConfig::for_numerology(&numerology);
        Self {
            distance_m,
            numerology,
            srs,
            amp: Amplitude::USRP_B210,
            snr_db,
            attenuation_db: 0.0,
            num_snapshots,
            seed,
            bias_samples: 0.0,
            multipath: Vec::new(),
        }
    }

    pub fn one_way_delay_s(&self) -> f64 {
        self.distance_m / SPEED_OF_LIGHT
    }

    /// Round-trip delay `2 d / c` in samples, plus the bias.
    pub fn round_trip_delay_samples(&self) -> f64 {
        2.0 * self.one_way_delay_s() * self.numerology.sampling_rate_hz + self.bias_samples
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.numerology.validate()?;
        if !(self.distance_m >= 0.0) || !self.distance_m.is_finite() {
            return Err(SimError::Scenario(format!("distance {} m is invalid", self.distance_m)));
        }
        if self.num_snapshots == 0 {
            return Err(SimError::Scenario("at least one snapshot is required".into()));
        }
        if self.snr_db.is_nan() {
            return Err(SimError::Scenario("SNR is NaN".into()));
        }
        if !(self.attenuation_db >= 0.0) || !self.attenuation_db.is_finite() {
            return Err(SimError::Scenario(format!(
                "attenuation {} dB must be finite and non-negative",
                self.attenuation_db
            )));
        }
        let delay = self.round_trip_delay_samples();
        if !(delay >= 0.0) {
            return Err(SimError::Scenario(format!("round-trip delay {delay} is negative")));
        }
        let longest = self
            .multipath
            .iter()
            .map(|t| t.delay_samples)
            .fold(0.0, f64::max);
        if delay + longest > self.numerology.cp_len as f64 {
            return Err(SimError::RangeAmbiguity {
                delay: delay + longest,
                cp: self.numerology.cp_len,
            });
        }
        Ok(())
    }
}

/// One received snapshot: symbol 0 carries the SRS, symbol 1 is empty and
/// serves as the noise reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RttSnapshot {
    pub rx_grid: ResourceGrid,
    pub ground_truth_delay_samples: f64,
    pub seed: u64,
}

/// Transmit side shared by every snapshot of a scenario.
#[derive(Debug, Clone)]
pub struct RttTransmission {
    pub srs: ReferenceSignal,
    pub tx_grid: ResourceGrid,
    pub tx_samples: IqBufferQ15,
    /// Mean SRS power per RE, Q15 counts squared.
    pub signal_power: f64,
}

pub const RTT_SYMBOLS: usize = 2;

pub fn prepare_transmission(sc: &RttScenario) -> Result<RttTransmission, SimError> {
    sc.validate()?;
    let srs = generate_srs(&sc.srs, &sc.numerology)?;
    let mut tx_grid = ResourceGrid::new(&sc.numerology, RTT_SYMBOLS);
    tx_grid.map_signal(&srs, sc.amp)?;
    let tx_samples = Ofdm::new(&sc.numerology)?.modulate(&tx_grid)?;
    let signal_power = power_per_re(&tx_grid.values_at(&srs.re_indices))?.p_linear;
    Ok(RttTransmission {
        srs,
        tx_grid,
        tx_samples,
        signal_power,
    })
}

fn path_gain(sc: &RttScenario) -> f64 {
    10f64.powf(-sc.attenuation_db / 20.0)
}

fn channel_for(sc: &RttScenario, seed: u64) -> ChannelSpec {
    let g = path_gain(sc);
    let mut taps = vec![Tap {
        delay_samples: 0.0,
        gain: Complex64::new(g, 0.0),
    }];
    taps.extend(sc.multipath.iter().map(|t| Tap {
        delay_samples: t.delay_samples,
        gain: t.gain * g,
    }));
    ChannelSpec {
        delay_samples: sc.round_trip_delay_samples(),
        taps,
        snr_db: sc.snr_db,
        seed,
    }
}

fn run_snapshot(
    sc: &RttScenario,
    tx: &RttTransmission,
    ofdm: &Ofdm,
    index: usize,
) -> Result<RttSnapshot, SimError> {
    let seed = sc.seed ^ index as u64;
    let spec = channel_for(sc, seed);
    let power = tx.signal_power * path_gain(sc).powi(2);
    let rx = apply_channel(&tx.tx_samples.to_complex(), &spec, power)?;
    let rx = IqBufferQ15::from_complex_round(&rx)?;
    Ok(RttSnapshot {
        rx_grid: ofdm.demodulate(&rx, RTT_SYMBOLS)?,
        ground_truth_delay_samples: spec.delay_samples,
        seed,
    })
}

/// Generates, delays, adds noise and demodulates `num_snapshots` SRS
/// receptions. Snapshot `i` uses noise seed `seed ^ i`.
pub fn simulate_rtt_exchange(sc: &RttScenario) -> Result<Vec<RttSnapshot>, SimError> {
    simulate_rtt_exchange_jobs(sc, 1)
}

/// As [`simulate_rtt_exchange`], spreading snapshots over `jobs` threads.
/// Output is identical to the sequential run.
pub fn simulate_rtt_exchange_jobs(sc: &RttScenario, jobs: usize) -> Result<Vec<RttSnapshot>, SimError> {
    let tx = prepare_transmission(sc)?;
    let ofdm = Ofdm::new(&sc.numerology)?;
    let jobs = jobs.clamp(1, sc.num_snapshots);
    if jobs == 1 {
        return (0..sc.num_snapshots)
            .map(|i| run_snapshot(sc, &tx, &ofdm, i))
            .collect();
    }
    let mut slots: Vec<Option<Result<RttSnapshot, SimError>>> = vec![None; sc.num_snapshots];
    std::thread::scope(|s| {
        for (w, chunk) in slots.chunks_mut(sc.num_snapshots.div_ceil(jobs)).enumerate() {
            let (tx, ofdm) = (&tx, &ofdm);
            let base = w * sc.num_snapshots.div_ceil(jobs);
            s.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_snapshot(sc, tx, ofdm, base + j));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::estimate_snr;
    use crate::ofdm::ReIndex;

    fn tone(len: usize, f: f64) -> Vec<Complex64> {
        (0..len)
            .map(|n| Complex64::from_polar(1.0, 2.0 * PI * f * n as f64))
            .collect()
    }

    #[test]
    fn splitmix_reference_values() {
        // Published SplitMix64 outputs for seed 1234567.
        let mut r = SplitMix64::new(1_234_567);
        assert_eq!(r.next_u64(), 6_457_827_717_110_365_317);
        assert_eq!(r.next_u64(), 3_203_168_211_198_807_973);
        assert_eq!(r.next_u64(), 9_817_491_932_198_370_423);
    }

    #[test]
    fn gaussian_moments() {
        let mut g = GaussianSource::from_seed(11);
        let v: Vec<f64> = (0..100_000).map(|_| g.next()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_and_integer_delay() {
        let x: Vec<Complex64> = (0..40).map(|n| Complex64::new(n as f64, -(n as f64))).collect();
        assert_eq!(apply_delay(&x, 0.0, DelayMethod::WindowedSinc).unwrap().samples, x);
        let mut imp = vec![Complex64::new(0.0, 0.0); 64];
        imp[0] = Complex64::new(1.0, 0.0);
        let d = apply_delay(&imp, 10.0, DelayMethod::WindowedSinc).unwrap();
        for (n, z) in d.samples.iter().enumerate() {
            let expect = if n == 10 { 1.0 } else { 0.0 };
            assert_eq!(*z, Complex64::new(expect, 0.0));
        }
        assert_eq!(d.valid, 10..64);
    }

    #[test]
    fn delay_errors() {
        let x = vec![Complex64::new(1.0, 0.0); 8];
        assert!(apply_delay(&x, -0.1, DelayMethod::WindowedSinc).is_err());
        assert!(apply_delay(&x, 8.0, DelayMethod::WindowedSinc).is_err());
        assert!(apply_delay(&x, f64::NAN, DelayMethod::PhaseRamp).is_err());
    }

    #[test]
    fn fractional_delay_matches_tone_phase() {
        // Whole number of cycles so the circular ramp sees a periodic tone.
        let f = 26.0 / 256.0;
        let x = tone(256, f);
        for method in [DelayMethod::WindowedSinc, DelayMethod::PhaseRamp] {
            let d = apply_delay(&x, 10.5, method).unwrap();
            let rot = Complex64::from_polar(1.0, -2.0 * PI * f * 10.5);
            let range = if method == DelayMethod::WindowedSinc { d.valid.clone() } else { 0..256 };
            for n in range {
                let expect = x[n] * rot;
                assert!((d.samples[n] - expect).norm() < 1e-3, "{method:?} n {n}");
            }
        }
    }

    #[test]
    fn phase_ramp_circular_integer_shift() {
        let x: Vec<Complex64> = (0..32).map(|n| Complex64::new((n * n % 7) as f64, 1.0)).collect();
        let d = apply_delay(&x, 3.0, DelayMethod::PhaseRamp).unwrap();
        for n in 0..32 {
            assert!((d.samples[n] - x[(n + 29) % 32]).norm() < 1e-9);
        }
    }

    #[test]
    fn delays_compose() {
        let x = tone(400, 0.23);
        let ab = apply_delay(&apply_delay(&x, 2.3, DelayMethod::WindowedSinc).unwrap().samples, 4.45, DelayMethod::WindowedSinc).unwrap();
        let direct = apply_delay(&x, 6.75, DelayMethod::WindowedSinc).unwrap();
        for n in 60..340 {
            assert!((ab.samples[n] - direct.samples[n]).norm() < 1e-3, "n {n}");
        }
    }

    #[test]
    fn awgn_identity_determinism_and_whiteness() {
        let zeros = vec![Complex64::new(0.0, 0.0); 10_000];
        assert_eq!(apply_awgn(&zeros, f64::INFINITY, 1.0, 1).unwrap(), zeros);
        let a = apply_awgn(&zeros, 0.0, 1.0, 42).unwrap();
        assert_eq!(a, apply_awgn(&zeros, 0.0, 1.0, 42).unwrap());
        assert_ne!(a, apply_awgn(&zeros, 0.0, 1.0, 43).unwrap());
        let r0: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        for lag in 1..20 {
            let r: Complex64 = (0..a.len() - lag).map(|n| a[n + lag] * a[n].conj()).sum();
            assert!(r.norm() / r0 < 0.05, "lag {lag}");
        }
        assert!(apply_awgn(&zeros, 10.0, 0.0, 1).is_err());
    }

    #[test]
    fn awgn_measured_snr_matches_target() {
        // 10^4 REs of a constant-power signal, noise reference from a separate block.
        let p = 519.0 * 519.0;
        let sig = vec![Complex64::new(519.0, 0.0); 10_000];
        let zeros = vec![Complex64::new(0.0, 0.0); 10_000];
        for snr in [0.0, 10.0, 25.0] {
            let rx = IqBufferQ15::from_complex_round(&apply_awgn(&sig, snr, p, 5).unwrap()).unwrap();
            let nz = IqBufferQ15::from_complex_round(&apply_awgn(&zeros, snr, p, 6).unwrap()).unwrap();
            let est = estimate_snr(
                &power_per_re(rx.samples()).unwrap(),
                &power_per_re(nz.samples()).unwrap(),
            )
            .unwrap();
            assert!((est.db - snr).abs() < 0.5, "snr {snr}: {}", est.db);
        }
    }

    #[test]
    fn scenario_ground_truth() {
        let sc = RttScenario::new(10.0, 25.0, 1, 0);
        assert!((sc.round_trip_delay_samples() - 3.0739).abs() < 1e-3);
        assert_eq!(RttScenario::new(0.0, 25.0, 1, 0).round_trip_delay_samples(), 0.0);
        let truths: Vec<f64> = (7..=11)
            .map(|d| RttScenario::new(d as f64, 25.0, 1, 0).round_trip_delay_samples())
            .collect();
        assert!(truths.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scenario_rejects_delay_beyond_cp() {
        // 132 samples at 46.08 MHz is about 429 m of range.
        let sc = RttScenario::new(500.0, 25.0, 1, 0);
        assert!(matches!(sc.validate(), Err(SimError::RangeAmbiguity { .. })));
        assert!(RttScenario::new(10.0, 25.0, 0, 0).validate().is_err());
    }

    #[test]
    fn rtt_exchange_is_deterministic_and_parallel_safe() {
        let sc = RttScenario::new(9.0, 20.0, 4, 77);
        let a = simulate_rtt_exchange(&sc).unwrap();
        let b = simulate_rtt_exchange(&sc).unwrap();
        let c = simulate_rtt_exchange_jobs(&sc, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.len(), 4);
        assert_ne!(a[0].rx_grid, a[1].rx_grid);
    }

    #[test]
    fn rtt_exchange_snr_on_grid() {
        let sc = RttScenario::new(8.0, 10.0, 3, 1);
        let tx = prepare_transmission(&sc).unwrap();
        for snap in simulate_rtt_exchange(&sc).unwrap() {
            let sig = snap.rx_grid.values_at(&tx.srs.re_indices);
            let empty: Vec<ReIndex> = tx
                .srs
                .re_indices
                .iter()
                .map(|r| ReIndex::new(1, r.subcarrier))
                .collect();
            let est = estimate_snr(
                &power_per_re(&sig).unwrap(),
                &power_per_re(&snap.rx_grid.values_at(&empty)).unwrap(),
            )
            .unwrap();
            assert!((est.db - 10.0).abs() < 1.0, "{}", est.db);
        }
    }
}
