//! Signed Q1.15 representation of complex baseband samples.
//!
//! A component `v` stored as `i16` stands for the real value `v / 2^15`, so the
//! representable range is `[-1, 1)`. Conversion from floating point uses floor
//! (toward negative infinity) and never saturates: a value outside the range is
//! reported as an error because it means the caller did not normalize.
//!
//! [`Amplitude`] carries the linear scale `A` applied before the IFFT and its
//! level in dB relative to full scale, `20 log10(A / 2^15)`.

use num_complex::Complex64;
use thiserror::Error;

/// Full-scale level of the Q15 format, `A_max = 2^15`.
pub const Q15_FULL_SCALE: i32 = 1 << 15;

const Q15_SCALE_F64: f64 = 32768.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedPointError {
    #[error("value {0} outside the Q15 range [-1, 1)")]
    OutOfRange(f64),
    #[error("amplitude {0} outside (0, 32768]")]
    InvalidAmplitude(i64),
    #[error("{0} dBFS exceeds full scale")]
    AboveFullScale(f64),
    #[error("dBFS value {0} is not finite")]
    NonFinite(f64),
    #[error("quantized value {0} does not fit in 16 bits")]
    Overflow(f64),
}

/// One complex sample, in-phase and quadrature components in Q1.15.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SampleQ15 {
    pub i: i16,
    pub q: i16,
}

impl SampleQ15 {
    pub const ZERO: SampleQ15 = SampleQ15 { i: 0, q: 0 };

    pub const fn new(i: i16, q: i16) -> Self {
        Self { i, q }
    }

    pub fn is_zero(self) -> bool {
        self.i == 0 && self.q == 0
    }

    /// Raw integer value as a complex number, in Q15 counts (not normalized).
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(f64::from(self.i), f64::from(self.q))
    }

    /// `i^2 + q^2` in exact integer arithmetic.
    pub fn norm_sqr(self) -> u64 {
        let i = i64::from(self.i);
        let q = i64::from(self.q);
        (i * i + q * q) as u64
    }

    /// Rounds a complex value given in Q15 counts to the nearest sample.
    pub fn from_complex_round(z: Complex64) -> Result<Self, FixedPointError> {
        Ok(Self {
            i: round_to_i16(z.re)?,
            q: round_to_i16(z.im)?,
        })
    }

    /// Floors a complex value given in Q15 counts, component-wise.
    pub fn from_complex_floor(z: Complex64) -> Result<Self, FixedPointError> {
        Ok(Self {
            i: floor_to_i16(z.re)?,
            q: floor_to_i16(z.im)?,
        })
    }

    pub fn to_le_bytes(self) -> [u8; 4] {
        let i = self.i.to_le_bytes();
        let q = self.q.to_le_bytes();
        [i[0], i[1], q[0], q[1]]
    }

    pub fn from_le_bytes(b: [u8; 4]) -> Self {
        Self {
            i: i16::from_le_bytes([b[0], b[1]]),
            q: i16::from_le_bytes([b[2], b[3]]),
        }
    }
}

/// Contiguous complex samples, serialized as `I0 Q0 I1 Q1 ...` little-endian
/// 16-bit words with no header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IqBufferQ15 {
    samples: Vec<SampleQ15>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("byte length {len} is not a whole number of 4-byte I/Q samples")]
pub struct TruncatedIq {
    pub len: usize,
}

impl IqBufferQ15 {
    pub fn new(samples: Vec<SampleQ15>) -> Self {
        Self { samples }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            samples: vec![SampleQ15::ZERO; len],
        }
    }

    /// Number of complex samples `K`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SampleQ15] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [SampleQ15] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<SampleQ15> {
        self.samples
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.to_complex()).collect()
    }

    /// Rounds complex values (Q15 counts) to the nearest representable sample.
    pub fn from_complex_round(values: &[Complex64]) -> Result<Self, FixedPointError> {
        values
            .iter()
            .map(|&z| SampleQ15::from_complex_round(z))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 4);
        for s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self, TruncatedIq> {
        if !bytes.len().is_multiple_of(4) {
            return Err(TruncatedIq { len: bytes.len() });
        }
        let samples = bytes
            .chunks_exact(4)
            .map(|c| SampleQ15::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { samples })
    }
}

impl From<Vec<SampleQ15>> for IqBufferQ15 {
    fn from(samples: Vec<SampleQ15>) -> Self {
        Self::new(samples)
    }
}

/// `floor(x * 2^15)` for `x` in `[-1, 1)`.
pub fn float_to_q15(x: f64) -> Result<i16, FixedPointError> {
    if !(-1.0..1.0).contains(&x) {
        return Err(FixedPointError::OutOfRange(x));
    }
    // x * 2^15 is exact in binary floating point, so floor is exact too.
    Ok((x * Q15_SCALE_F64).floor() as i16)
}

pub fn q15_to_float(v: i16) -> f64 {
    f64::from(v) / Q15_SCALE_F64
}

/// Quantizes one component of a unit-modulus reference symbol.
///
/// Identical to [`float_to_q15`] except that the closed upper end `x = 1`
/// (within 1e-9) maps to the largest code, 32767. Any other value outside
/// `[-1, 1)` is still an error.
pub fn unit_to_q15(x: f64) -> Result<i16, FixedPointError> {
    if (1.0..=1.0 + 1e-9).contains(&x) {
        return Ok(i16::MAX);
    }
    float_to_q15(x)
}

fn round_to_i16(x: f64) -> Result<i16, FixedPointError> {
    let r = x.round();
    if !(-32768.0..=32767.0).contains(&r) {
        return Err(FixedPointError::Overflow(x));
    }
    Ok(r as i16)
}

fn floor_to_i16(x: f64) -> Result<i16, FixedPointError> {
    let r = x.floor();
    if !(-32768.0..=32767.0).contains(&r) {
        return Err(FixedPointError::Overflow(x));
    }
    Ok(r as i16)
}

/// Linear amplitude scale `A` in `(0, 2^15]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Amplitude(u32);

impl Amplitude {
    pub const FULL_SCALE: Amplitude = Amplitude(1 << 15);
    /// USRP B210 level: -36 dBFS.
    pub const USRP_B210: Amplitude = Amplitude(519);
    /// O-RAN 7.2 split VVDN radio unit level: -12 dBFS.
    pub const ORAN_VVDN_RU: Amplitude = Amplitude(8231);

    pub fn new(a: i64) -> Result<Self, FixedPointError> {
        if a <= 0 || a > i64::from(Q15_FULL_SCALE) {
            return Err(FixedPointError::InvalidAmplitude(a));
        }
        Ok(Self(a as u32))
    }

    pub fn from_dbfs(dbfs: f64) -> Result<Self, FixedPointError> {
        let a = dbfs_to_amplitude(dbfs)?;
        Self::new(i64::from(a))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn dbfs(self) -> f64 {
        20.0 * (f64::from(self.0) / Q15_SCALE_F64).log10()
    }

    /// Position of the most significant magnitude bit, `floor(log2 A)`.
    ///
    /// For the device levels above this is 9 (A = 519) and 13 (A = 8231).
    pub fn magnitude_bits(self) -> u32 {
        31 - self.0.leading_zeros()
    }
}

/// `floor(A * x / 2^15)` in 32-bit arithmetic. `|result| <= A`.
pub fn rescale(x: i16, amp: Amplitude) -> i16 {
    // |A * x| <= 2^30, and an arithmetic right shift is floor division.
    let prod = amp.0 as i32 * i32::from(x);
    (prod >> 15) as i16
}

pub fn amplitude_to_dbfs(a: i64) -> Result<f64, FixedPointError> {
    if a <= 0 {
        return Err(FixedPointError::InvalidAmplitude(a));
    }
    Ok(20.0 * (a as f64 / Q15_SCALE_F64).log10())
}

/// `round(2^15 * 10^(dbfs/20))`, half rounded up.
pub fn dbfs_to_amplitude(dbfs: f64) -> Result<u32, FixedPointError> {
    if !dbfs.is_finite() {
        return Err(FixedPointError::NonFinite(dbfs));
    }
    if dbfs > 0.0 {
        return Err(FixedPointError::AboveFullScale(dbfs));
    }
    let a = (Q15_SCALE_F64 * 10f64.powf(dbfs / 20.0) + 0.5).floor();
    if a < 1.0 {
        return Err(FixedPointError::InvalidAmplitude(a as i64));
    }
    Ok(a as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_to_q15_examples() {
        assert_eq!(float_to_q15(0.5), Ok(16384));
        assert_eq!(float_to_q15(-1.0), Ok(-32768));
        // floor(0.1 * 32768) = floor(3276.8)
        assert_eq!(float_to_q15(0.1), Ok(3276));
        assert_eq!(float_to_q15(-0.1), Ok(-3277));
    }

    #[test]
    fn float_to_q15_rejects_unnormalized() {
        assert!(matches!(float_to_q15(1.0), Err(FixedPointError::OutOfRange(_))));
        assert!(float_to_q15(-1.000001).is_err());
        assert!(float_to_q15(f64::NAN).is_err());
    }

    #[test]
    fn q15_to_float_examples() {
        assert_eq!(q15_to_float(16384), 0.5);
        assert_eq!(q15_to_float(-32768), -1.0);
        assert_eq!(q15_to_float(3276), 0.0999755859375);
    }

    #[test]
    fn unit_upper_bound_maps_to_max_code() {
        assert_eq!(unit_to_q15(1.0), Ok(32767));
        assert_eq!(unit_to_q15(0.5), Ok(16384));
        assert!(unit_to_q15(1.01).is_err());
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(rescale(32767, Amplitude::USRP_B210), 518);
        assert_eq!(rescale(0, Amplitude::ORAN_VVDN_RU), 0);
        assert_eq!(rescale(-32768, Amplitude::FULL_SCALE), -32768);
        assert_eq!(rescale(-32768, Amplitude::USRP_B210), -519);
    }

    #[test]
    fn dbfs_examples() {
        assert!((amplitude_to_dbfs(519).unwrap() + 36.0).abs() < 0.1);
        assert!((amplitude_to_dbfs(8231).unwrap() + 12.0).abs() < 0.1);
        assert_eq!(amplitude_to_dbfs(32768).unwrap(), 0.0);
        assert!(amplitude_to_dbfs(0).is_err());
        assert!(amplitude_to_dbfs(-4).is_err());

        assert_eq!(dbfs_to_amplitude(-36.0), Ok(519));
        assert_eq!(dbfs_to_amplitude(0.0), Ok(32768));
        assert_eq!(dbfs_to_amplitude(-12.0), Ok(8231));
        assert!(matches!(
            dbfs_to_amplitude(0.5),
            Err(FixedPointError::AboveFullScale(_))
        ));
    }

    #[test]
    fn device_bit_widths() {
        assert_eq!(Amplitude::USRP_B210.magnitude_bits(), 9);
        assert_eq!(Amplitude::ORAN_VVDN_RU.magnitude_bits(), 13);
        assert_eq!(Amplitude::FULL_SCALE.magnitude_bits(), 15);
    }

    #[test]
    fn amplitude_dbfs_pair_is_inverse_for_every_level() {
        for a in 1..=32768i64 {
            let db = amplitude_to_dbfs(a).unwrap();
            assert_eq!(i64::from(dbfs_to_amplitude(db).unwrap()), a, "a = {a}");
        }
    }

    #[test]
    fn dbfs_round_trip_error_is_half_lsb() {
        // Integer amplitudes cannot hit an arbitrary dB target closer than
        // half a step, at most 20 log10(A / (A - 0.5)).
        let mut db = 0.0;
        while db >= -80.0 {
            let a = dbfs_to_amplitude(db).unwrap();
            let err = (amplitude_to_dbfs(i64::from(a)).unwrap() - db).abs();
            let bound = 20.0 * (f64::from(a) / (f64::from(a) - 0.5)).log10() + 1e-12;
            assert!(err <= bound, "db {db}: err {err} bound {bound}");
            if db >= -43.0 {
                assert!(err <= 0.02, "db {db}: err {err}");
            }
            db -= 0.01;
        }
    }

    #[test]
    fn iq_layout_is_interleaved_little_endian() {
        let buf = IqBufferQ15::new(vec![SampleQ15::new(1, -1), SampleQ15::new(0x1234, 0)]);
        assert_eq!(
            buf.to_le_bytes(),
            vec![0x01, 0x00, 0xFF, 0xFF, 0x34, 0x12, 0x00, 0x00]
        );
        assert_eq!(IqBufferQ15::from_le_bytes(&buf.to_le_bytes()).unwrap(), buf);
        assert_eq!(
            IqBufferQ15::from_le_bytes(&[0, 0, 0]),
            Err(TruncatedIq { len: 3 })
        );
    }

    #[test]
    fn rounding_constructors_report_overflow() {
        assert_eq!(
            SampleQ15::from_complex_round(Complex64::new(1.4, -2.6)).unwrap(),
            SampleQ15::new(1, -3)
        );
        assert!(SampleQ15::from_complex_round(Complex64::new(32767.6, 0.0)).is_err());
        assert!(SampleQ15::from_complex_floor(Complex64::new(-32768.5, 0.0)).is_err());
        assert_eq!(
            SampleQ15::from_complex_floor(Complex64::new(-0.5, 2.9)).unwrap(),
            SampleQ15::new(-1, 2)
        );
    }

    proptest! {
        #[test]
        fn rescale_is_monotone(x1 in any::<i16>(), x2 in any::<i16>(), a in 1i64..=32768) {
            let amp = Amplitude::new(a).unwrap();
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            prop_assert!(rescale(lo, amp) <= rescale(hi, amp));
            prop_assert!(i64::from(rescale(x1, amp)).abs() <= a);
        }

        #[test]
        fn quantization_error_below_one_lsb(x in -1.0f64..1.0) {
            let back = q15_to_float(float_to_q15(x).unwrap());
            prop_assert!(back <= x);
            prop_assert!(x - back < 1.0 / 32768.0);
        }

        #[test]
        fn iq_bytes_round_trip(raw in proptest::collection::vec(any::<(i16, i16)>(), 0..64)) {
            let buf = IqBufferQ15::new(raw.iter().map(|&(i, q)| SampleQ15::new(i, q)).collect());
            prop_assert_eq!(IqBufferQ15::from_le_bytes(&buf.to_le_bytes()).unwrap(), buf);
        }
    }
}
