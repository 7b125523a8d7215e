//! Per-RE power, dBm conversion and SNR.
//!
//! Powers are mean `|v|^2` over a set of resource elements, in squared Q15
//! counts. Converting to dBm removes the Q15 full scale `(2^15)^2`, moves from
//! dBW to dBm, and applies the device gain and calibration offset: transmit
//! gain is added, receive gain subtracted (power referred to the antenna port).

use num_complex::Complex64;
use thiserror::Error;

use crate::fixedpoint::{Amplitude, SampleQ15};
use crate::ofdm::{ReIndex, ResourceGrid};

/// `10 log10((2^15)^2)`.
pub const Q15_POWER_DB: f64 = 90.308_998_699_194_35;

/// Linear floor applied to non-positive SNR estimates.
pub const DEFAULT_SNR_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("power needs at least one resource element")]
    EmptySet,
    #[error("zero power has no dB value")]
    ZeroPower,
    #[error("noise power is zero")]
    DegenerateNoise,
    #[error("resource element {0} lies outside the grid")]
    OutsideGrid(ReIndex),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    pub name: String,
    pub amp: Amplitude,
    /// Transmit gain, dB.
    pub g_t: f64,
    /// Receive gain, dB.
    pub g_r: f64,
    /// Transmit calibration offset, dB.
    pub g_t_cal: f64,
    /// Receive calibration offset, dB.
    pub g_r_cal: f64,
}

impl DeviceProfile {
    pub fn new(name: impl Into<String>, amp: Amplitude) -> Self {
        Self {
            name: name.into(),
            amp,
            g_t: 0.0,
            g_r: 0.0,
            g_t_cal: 0.0,
            g_r_cal: 0.0,
        }
    }

    /// USRP B210: -36 dBFS, A = 519.
    pub fn usrp_b210() -> Self {
        Self::new("usrp-b210", Amplitude::USRP_B210)
    }

    /// O-RAN 7.2 split VVDN RU: -12 dBFS, A = 8231.
    pub fn oran_vvdn_ru() -> Self {
        Self::new("oran-vvdn-ru", Amplitude::ORAN_VVDN_RU)
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "usrp-b210" | "usrp" | "b210" => Some(Self::usrp_b210()),
            "oran-vvdn-ru" | "vvdn" => Some(Self::oran_vvdn_ru()),
            _ => None,
        }
    }
}

impl Default for DeviceProfile {
    fn default() -> Self {
        Self::usrp_b210()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    /// Mean `|v|^2` per resource element.
    pub p_linear: f64,
    /// Number of resource elements averaged.
    pub n_res: usize,
    /// Exact `sum(i^2 + q^2)` when the inputs were Q15 integers.
    pub sum_sq: Option<u128>,
}

impl PowerReport {
    pub fn db(&self) -> Result<f64, MetricsError> {
        if self.p_linear <= 0.0 {
            return Err(MetricsError::ZeroPower);
        }
        Ok(10.0 * self.p_linear.log10())
    }
}

pub fn power_per_re(values: &[SampleQ15]) -> Result<PowerReport, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let sum: u128 = values.iter().map(|v| u128::from(v.norm_sqr())).sum();
    Ok(PowerReport {
        p_linear: sum as f64 / values.len() as f64,
        n_res: values.len(),
        sum_sq: Some(sum),
    })
}

/// Mean `|z|^2` of floating-point values (channel estimates, impulse responses).
pub fn power_of_complex(values: &[Complex64]) -> Result<PowerReport, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let sum: f64 = values.iter().map(|z| z.norm_sqr()).sum();
    Ok(PowerReport {
        p_linear: sum / values.len() as f64,
        n_res: values.len(),
        sum_sq: None,
    })
}

fn q15_power_dbm(p: &PowerReport) -> Result<f64, MetricsError> {
    Ok(p.db()? - Q15_POWER_DB + 30.0)
}

pub fn tx_power_dbm(p: &PowerReport, dev: &DeviceProfile) -> Result<f64, MetricsError> {
    Ok(q15_power_dbm(p)? + dev.g_t + dev.g_t_cal)
}

pub fn rx_power_dbm(p: &PowerReport, dev: &DeviceProfile) -> Result<f64, MetricsError> {
    Ok(q15_power_dbm(p)? - dev.g_r + dev.g_r_cal)
}

/// Power over resource elements that carry no signal.
pub fn noise_power(grid: &ResourceGrid, empty_res: &[ReIndex]) -> Result<PowerReport, MetricsError> {
    if let Some(&re) = empty_res
        .iter()
        .find(|re| re.symbol >= grid.num_symbols() || re.subcarrier >= grid.fft_size())
    {
        return Err(MetricsError::OutsideGrid(re));
    }
    power_per_re(&grid.values_at(empty_res))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrEstimate {
    /// `(P_r - P_n) / P_n`, before flooring.
    pub linear: f64,
    /// `10 log10(max(linear, floor))`.
    pub db: f64,
    /// Set when the linear estimate fell to or below the floor.
    pub unreliable: bool,
}

pub fn estimate_snr(p_r: &PowerReport, p_n: &PowerReport) -> Result<SnrEstimate, MetricsError> {
    estimate_snr_with_floor(p_r, p_n, DEFAULT_SNR_FLOOR)
}

pub fn estimate_snr_with_floor(
    p_r: &PowerReport,
    p_n: &PowerReport,
    floor: f64,
) -> Result<SnrEstimate, MetricsError> {
    if p_n.p_linear <= 0.0 {
        return Err(MetricsError::DegenerateNoise);
    }
    let linear = (p_r.p_linear - p_n.p_linear) / p_n.p_linear;
    let unreliable = linear <= floor;
    Ok(SnrEstimate {
        linear,
        db: 10.0 * linear.max(floor).log10(),
        unreliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simchan::{GaussianSource, SplitMix64};
    use proptest::prelude::*;

    fn report(p: f64) -> PowerReport {
        PowerReport {
            p_linear: p,
            n_res: 1,
            sum_sq: None,
        }
    }

    #[test]
    fn q15_power_constant() {
        assert!((Q15_POWER_DB - 10.0 * 2f64.powi(30).log10()).abs() < 1e-12);
    }

    #[test]
    fn power_per_re_examples() {
        let p = power_per_re(&[SampleQ15::new(16384, 0); 10]).unwrap();
        assert_eq!(p.p_linear, 268_435_456.0);
        assert_eq!(p.sum_sq, Some(10 * (1u128 << 28)));
        assert_eq!(power_per_re(&[SampleQ15::ZERO; 4]).unwrap().p_linear, 0.0);
        assert_eq!(power_per_re(&[SampleQ15::new(3, 4)]).unwrap().p_linear, 25.0);
        assert_eq!(power_per_re(&[]), Err(MetricsError::EmptySet));
    }

    #[test]
    fn power_accumulates_without_overflow() {
        let v = vec![SampleQ15::new(-32768, -32768); 100_000];
        let p = power_per_re(&v).unwrap();
        assert_eq!(p.sum_sq, Some(100_000u128 * 2 * (1u128 << 30)));
        assert_eq!(p.p_linear, 2.0 * 2f64.powi(30));
    }

    #[test]
    fn tx_power_examples() {
        let dev = DeviceProfile::usrp_b210();
        assert!((tx_power_dbm(&report(2f64.powi(30)), &dev).unwrap() - 30.0).abs() < 1e-9);
        assert!((tx_power_dbm(&report(2f64.powi(28)), &dev).unwrap() - 23.979_400_086_720_376).abs() < 1e-9);
        let mut dev = dev;
        dev.g_t = 10.0;
        dev.g_t_cal = -3.0;
        assert!((tx_power_dbm(&report(2f64.powi(30)), &dev).unwrap() - 37.0).abs() < 1e-9);
        assert_eq!(tx_power_dbm(&report(0.0), &dev), Err(MetricsError::ZeroPower));
    }

    #[test]
    fn rx_power_examples() {
        let mut dev = DeviceProfile::usrp_b210();
        assert!((rx_power_dbm(&report(2f64.powi(30)), &dev).unwrap() - 30.0).abs() < 1e-9);
        dev.g_r = 40.0;
        assert!((rx_power_dbm(&report(2f64.powi(30)), &dev).unwrap() + 10.0).abs() < 1e-9);
        dev.g_r = 0.0;
        dev.g_r_cal = 2.0;
        // 30 + 10 log10(2^-6) + 2
        let expected = 32.0 - 60.0 * 2f64.log10();
        assert!((rx_power_dbm(&report(2f64.powi(24)), &dev).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 13.938).abs() < 1e-3);
    }

    #[test]
    fn tx_and_rx_agree_without_gains() {
        let dev = DeviceProfile::oran_vvdn_ru();
        for p in [1.0, 519.0 * 519.0, 1e9] {
            assert_eq!(
                tx_power_dbm(&report(p), &dev).unwrap(),
                rx_power_dbm(&report(p), &dev).unwrap()
            );
        }
    }

    #[test]
    fn noise_power_examples() {
        let mut g = ResourceGrid::with_dims(8, 8, 2);
        let res = [ReIndex::new(1, 3)];
        assert_eq!(noise_power(&g, &res).unwrap().p_linear, 0.0);
        g.set(ReIndex::new(1, 3), SampleQ15::new(1, 1)).unwrap();
        assert_eq!(noise_power(&g, &res).unwrap().p_linear, 2.0);
        assert_eq!(noise_power(&g, &[]), Err(MetricsError::EmptySet));
        assert!(matches!(
            noise_power(&g, &[ReIndex::new(2, 0)]),
            Err(MetricsError::OutsideGrid(_))
        ));
    }

    #[test]
    fn awgn_noise_power_is_twice_component_variance() {
        let sigma = 40.0;
        let mut g = GaussianSource::new(SplitMix64::new(3));
        let v: Vec<SampleQ15> = (0..20_000)
            .map(|_| {
                SampleQ15::from_complex_round(Complex64::new(sigma * g.next(), sigma * g.next())).unwrap()
            })
            .collect();
        let p = power_per_re(&v).unwrap().p_linear;
        let expect = 2.0 * sigma * sigma;
        assert!((p - expect).abs() / expect < 0.05, "{p} vs {expect}");
    }

    #[test]
    fn snr_examples() {
        let s = estimate_snr(&report(2.0), &report(1.0)).unwrap();
        assert_eq!((s.linear, s.db, s.unreliable), (1.0, 0.0, false));
        let s = estimate_snr(&report(5.0), &report(5.0)).unwrap();
        assert_eq!(s.linear, 0.0);
        assert!(s.unreliable);
        assert_eq!(s.db, -60.0);
        let s = estimate_snr(&report(101.0), &report(1.0)).unwrap();
        assert!((s.db - 20.0).abs() < 1e-12);
        assert_eq!(
            estimate_snr(&report(1.0), &report(0.0)),
            Err(MetricsError::DegenerateNoise)
        );
    }

    proptest! {
        #[test]
        fn power_scales_with_square_of_integer_gain(
            raw in proptest::collection::vec((-100i16..100, -100i16..100), 1..50),
            c in 1i16..300,
        ) {
            let base: Vec<SampleQ15> = raw.iter().map(|&(i, q)| SampleQ15::new(i, q)).collect();
            let scaled: Vec<SampleQ15> = base.iter().map(|s| SampleQ15::new(s.i * c, s.q * c)).collect();
            let p0 = power_per_re(&base).unwrap();
            let p1 = power_per_re(&scaled).unwrap();
            let c2 = (c as u128) * (c as u128);
            prop_assert_eq!(p1.sum_sq.unwrap(), p0.sum_sq.unwrap() * c2);
        }
    }
}
