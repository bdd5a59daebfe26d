use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// How a value that falls between two representable neighbours is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    NearestEven,
    TowardZero,
    TowardPositive,
    TowardNegative,
    /// Round up with probability proportional to the distance from the lower neighbour.
    Stochastic,
}

impl Rounding {
    pub const DETERMINISTIC: [Rounding; 4] = [
        Rounding::NearestEven,
        Rounding::TowardZero,
        Rounding::TowardPositive,
        Rounding::TowardNegative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rounding::NearestEven => "nearest-even",
            Rounding::TowardZero => "toward-zero",
            Rounding::TowardPositive => "toward-plus",
            Rounding::TowardNegative => "toward-minus",
            Rounding::Stochastic => "stochastic",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("exponent bits must lie in [2, 11], got {0}")]
    ExponentBits(u32),
    #[error("significand bits must lie in [1, 52], got {0}")]
    SignificandBits(u32),
    #[error("format wider than 64 bits ({0} bits)")]
    TooWide(u32),
    #[error("unknown format name `{0}`")]
    UnknownName(String),
}

/// Descriptor of an emulated binary floating-point format.
///
/// Values of a format are carried in `f64`; every format admitted by
/// [`Format::new`] is a subset of binary64, so rounding to it is exact to
/// represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Format {
    exp_bits: u32,
    sig_bits: u32,
    subnormals: bool,
    rounding: Rounding,
}

impl Format {
    /// IEEE binary16.
    pub const FP16: Format = Format::ieee(5, 10);
    /// bfloat16: binary32 range with 7 stored significand bits.
    pub const BF16: Format = Format::ieee(8, 7);
    /// IEEE binary32.
    pub const FP32: Format = Format::ieee(8, 23);
    /// IEEE binary64; rounding to it is the identity.
    pub const FP64: Format = Format::ieee(11, 52);

    const fn ieee(exp_bits: u32, sig_bits: u32) -> Format {
        Format {
            exp_bits,
            sig_bits,
            subnormals: true,
            rounding: Rounding::NearestEven,
        }
    }

    pub fn new(exp_bits: u32, sig_bits: u32) -> Result<Format, FormatError> {
        if !(2..=11).contains(&exp_bits) {
            return Err(FormatError::ExponentBits(exp_bits));
        }
        if !(1..=52).contains(&sig_bits) {
            return Err(FormatError::SignificandBits(sig_bits));
        }
        let width = exp_bits + sig_bits + 1;
        if width > 64 {
            return Err(FormatError::TooWide(width));
        }
        Ok(Format::ieee(exp_bits, sig_bits))
    }

    pub const fn with_rounding(self, rounding: Rounding) -> Format {
        Format { rounding, ..self }
    }

    pub const fn with_subnormals(self, subnormals: bool) -> Format {
        Format { subnormals, ..self }
    }

    pub fn exp_bits(&self) -> u32 {
        self.exp_bits
    }

    pub fn sig_bits(&self) -> u32 {
        self.sig_bits
    }

    pub fn subnormals(&self) -> bool {
        self.subnormals
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// Storage width in bits, sign included.
    pub fn bits(&self) -> u32 {
        1 + self.exp_bits + self.sig_bits
    }

    pub fn bias(&self) -> i32 {
        (1i32 << (self.exp_bits - 1)) - 1
    }

    /// Exponent of the smallest normal number.
    pub fn emin(&self) -> i32 {
        1 - self.bias()
    }

    /// Exponent of the largest finite number.
    pub fn emax(&self) -> i32 {
        self.bias()
    }

    /// Unit roundoff under round-to-nearest, `2^-(sig_bits+1)`.
    pub fn unit_roundoff(&self) -> f64 {
        pow2(-(self.sig_bits as i32) - 1)
    }

    /// Largest finite value, `(2 - 2^-sig_bits) * 2^emax`.
    pub fn x_max(&self) -> f64 {
        (2.0 - pow2(-(self.sig_bits as i32))) * pow2(self.emax())
    }

    /// Smallest positive normal value.
    pub fn x_min(&self) -> f64 {
        pow2(self.emin())
    }

    /// Smallest positive representable value (subnormal when enabled).
    pub fn smallest_positive(&self) -> f64 {
        if self.subnormals {
            pow2(self.emin() - self.sig_bits as i32)
        } else {
            self.x_min()
        }
    }

    /// True when rounding to this format leaves every binary64 value unchanged.
    pub fn is_binary64(&self) -> bool {
        self.exp_bits == 11 && self.sig_bits == 52 && self.subnormals
    }

    /// Short name of the predefined layout, ignoring the rounding mode.
    pub fn name(&self) -> Option<&'static str> {
        match (self.exp_bits, self.sig_bits) {
            (5, 10) => Some("fp16"),
            (8, 7) => Some("bf16"),
            (8, 23) => Some("fp32"),
            (11, 52) => Some("fp64"),
            _ => None,
        }
    }

    /// Next rung of the fp16/bf16 → fp32 → fp64 ladder, or `None` at binary64.
    pub fn promoted(&self) -> Option<Format> {
        let next = if self.sig_bits < 23 && self.exp_bits <= 8 {
            Format::FP32
        } else if !self.is_binary64() {
            Format::FP64
        } else {
            return None;
        };
        Some(next.with_rounding(self.rounding).with_subnormals(true))
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(name) => f.write_str(name)?,
            None => write!(f, "e{}m{}", self.exp_bits, self.sig_bits)?,
        }
        if !self.subnormals {
            f.write_str("-nosub")?;
        }
        if self.rounding != Rounding::NearestEven {
            write!(f, "-{}", self.rounding.name())?;
        }
        Ok(())
    }
}

impl FromStr for Format {
    type Err = FormatError;

    /// Accepts `fp16`, `bf16`, `fp32`, `fp64` (case-insensitive) and `eXmY`.
    fn from_str(s: &str) -> Result<Format, FormatError> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "fp16" | "half" | "binary16" => return Ok(Format::FP16),
            "bf16" | "bfloat16" => return Ok(Format::BF16),
            "fp32" | "single" | "binary32" => return Ok(Format::FP32),
            "fp64" | "double" | "binary64" => return Ok(Format::FP64),
            _ => {}
        }
        let custom = lower.strip_prefix('e').and_then(|rest| {
            let (e, m) = rest.split_once('m')?;
            Some((e.parse::<u32>().ok()?, m.parse::<u32>().ok()?))
        });
        match custom {
            Some((e, m)) => Format::new(e, m),
            None => Err(FormatError::UnknownName(s.to_string())),
        }
    }
}

/// Exact `2^e` for `e` in `[-1074, 1023]`.
pub(crate) fn pow2(e: i32) -> f64 {
    debug_assert!((-1074..=1023).contains(&e), "2^{e} is not a binary64 value");
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ieee_constants() {
        assert_eq!(Format::FP16.x_max(), 65504.0);
        assert_eq!(Format::FP16.x_min(), 2f64.powi(-14));
        assert_eq!(Format::FP16.smallest_positive(), 2f64.powi(-24));
        assert_eq!(Format::FP16.unit_roundoff(), 2f64.powi(-11));
        assert_eq!(Format::FP32.x_max(), f32::MAX as f64);
        assert_eq!(Format::FP32.x_min(), f32::MIN_POSITIVE as f64);
        assert_eq!(Format::FP32.unit_roundoff(), f32::EPSILON as f64 / 2.0);
        assert_eq!(Format::FP64.x_max(), f64::MAX);
        assert_eq!(Format::FP64.x_min(), f64::MIN_POSITIVE);
        assert_eq!(Format::FP64.unit_roundoff(), f64::EPSILON / 2.0);
        // bfloat16 shares the binary32 exponent range.
        assert_eq!(Format::BF16.x_min(), f32::MIN_POSITIVE as f64);
        assert_eq!(Format::BF16.x_max(), (2.0 - 2f64.powi(-7)) * 2f64.powi(127));
        assert_eq!(Format::BF16.bits(), 16);
    }

    #[test]
    fn validation() {
        assert_eq!(Format::new(1, 10), Err(FormatError::ExponentBits(1)));
        assert_eq!(Format::new(12, 10), Err(FormatError::ExponentBits(12)));
        assert_eq!(Format::new(5, 0), Err(FormatError::SignificandBits(0)));
        assert_eq!(Format::new(5, 53), Err(FormatError::SignificandBits(53)));
        assert_eq!(Format::new(11, 52), Ok(Format::FP64));
        assert!(Format::new(4, 3).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for f in [Format::FP16, Format::BF16, Format::FP32, Format::FP64] {
            assert_eq!(f.to_string().parse::<Format>().unwrap(), f);
        }
        assert_eq!("e4m3".parse::<Format>().unwrap(), Format::new(4, 3).unwrap());
        assert!("fp8".parse::<Format>().is_err());
        assert_eq!(
            Format::FP16.with_rounding(Rounding::TowardZero).to_string(),
            "fp16-toward-zero"
        );
    }

    #[test]
    fn promotion_ladder() {
        assert_eq!(Format::FP16.promoted(), Some(Format::FP32));
        assert_eq!(Format::BF16.promoted(), Some(Format::FP32));
        assert_eq!(Format::FP32.promoted(), Some(Format::FP64));
        assert_eq!(Format::FP64.promoted(), None);
    }

    #[test]
    fn pow2_extremes() {
        assert_eq!(pow2(0), 1.0);
        assert_eq!(pow2(-1074), f64::from_bits(1));
        assert_eq!(pow2(-1022), f64::MIN_POSITIVE);
        assert_eq!(pow2(1023), 2f64.powi(1023));
    }
}
