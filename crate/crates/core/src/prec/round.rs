//! Value-level rounding of binary64 numbers to an emulated [`Format`].
//!
//! The significand of the input is split at the target quantum with integer
//! arithmetic, so every mode is decided exactly and the result is formed by a
//! single exact scaling.

use rand::RngCore;

use super::format::{pow2, Format, Rounding};
use super::rng::Rng;

/// Scalar operation performed with one rounding to the target format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    /// `a * b + c` with a single rounding.
    Fma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tail {
    Zero,
    BelowHalf,
    Half,
    AboveHalf,
}

/// Round `x` to `fmt`.
///
/// Overflow follows IEEE semantics for the chosen mode (directed modes may
/// saturate at `x_max`); magnitudes under the smallest representable value
/// round to zero or to that value per the mode. `rng` must be supplied when
/// `fmt` uses stochastic rounding.
///
/// # Panics
///
/// If `fmt` is stochastic and `rng` is `None`.
pub fn round_value(x: f64, fmt: &Format, rng: Option<&mut Rng>) -> f64 {
    if x == 0.0 || !x.is_finite() || fmt.is_binary64() {
        return x;
    }
    let sig = fmt.sig_bits() as i32;
    let emin = fmt.emin();

    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    // x = mant * 2^exp2 exactly; e = floor(log2 |x|)
    let (mant, exp2, e) = if biased == 0 {
        (frac, -1074, 63 - frac.leading_zeros() as i32 - 1074)
    } else {
        (frac | (1u64 << 52), biased - 1075, biased - 1023)
    };

    // Quantum (ulp) exponent of the target grid around x. Without subnormals
    // the interval (0, x_min) holds only 0 and x_min.
    let quantum = if e >= emin {
        e - sig
    } else if fmt.subnormals() {
        emin - sig
    } else {
        emin
    };

    let shift = quantum - exp2;
    let (mut k, tail, rem, drop) = if shift <= 0 {
        (mant << (-shift) as u32, Tail::Zero, 0u64, 0i32)
    } else if shift >= 64 {
        // mant < 2^53 <= 2^(shift-1): strictly below half a quantum.
        (0u64, Tail::BelowHalf, mant, shift)
    } else {
        let rem = mant & ((1u64 << shift) - 1);
        let half = 1u64 << (shift - 1);
        let tail = match rem.cmp(&half) {
            _ if rem == 0 => Tail::Zero,
            std::cmp::Ordering::Less => Tail::BelowHalf,
            std::cmp::Ordering::Equal => Tail::Half,
            std::cmp::Ordering::Greater => Tail::AboveHalf,
        };
        (mant >> shift, tail, rem, shift)
    };

    let round_up = match (fmt.rounding(), tail) {
        (_, Tail::Zero) => false,
        (Rounding::NearestEven, Tail::AboveHalf) => true,
        (Rounding::NearestEven, Tail::Half) => k & 1 == 1,
        (Rounding::NearestEven, Tail::BelowHalf) => false,
        (Rounding::TowardZero, _) => false,
        (Rounding::TowardPositive, _) => !negative,
        (Rounding::TowardNegative, _) => negative,
        (Rounding::Stochastic, _) => {
            let rng = rng.expect("stochastic rounding requires an Rng");
            stochastic_up(rng, rem, drop)
        }
    };
    if round_up {
        k += 1;
    }

    let magnitude = k as f64 * pow2(quantum);
    let magnitude = if magnitude > fmt.x_max() {
        let saturate = match fmt.rounding() {
            Rounding::TowardZero => true,
            Rounding::TowardPositive => negative,
            Rounding::TowardNegative => !negative,
            Rounding::NearestEven | Rounding::Stochastic => false,
        };
        if saturate {
            fmt.x_max()
        } else {
            f64::INFINITY
        }
    } else {
        magnitude
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Draw the stochastic rounding decision: up with probability `rem / 2^drop`.
fn stochastic_up(rng: &mut Rng, rem: u64, drop: i32) -> bool {
    if drop <= 63 {
        let draw = rng.next_u64() >> (64 - drop);
        draw < rem
    } else {
        let p = rem as f64 * pow2((-drop).max(-1074));
        rng.uniform() < p
    }
}

/// True when `x` is a fixed point of rounding to `fmt`.
pub fn is_representable(x: f64, fmt: &Format) -> bool {
    if !x.is_finite() {
        return true;
    }
    let nearest = fmt.with_rounding(Rounding::NearestEven);
    round_value(x, &nearest, None) == x
}

/// Apply `op` exactly in binary64 and round the result once to `fmt`.
///
/// Inputs are expected to be representable in `fmt`; this is checked in
/// debug builds. For formats with at most 24 significand bits the binary64
/// result of `+ - * /` is exact or innocuous to double rounding, so the
/// emulation equals a native operation in that format.
///
/// # Panics
///
/// If `op` is [`Op::Fma`] and `c` is `None`, or if rounding is stochastic
/// and `rng` is `None`.
pub fn rounded_op(op: Op, a: f64, b: f64, c: Option<f64>, fmt: &Format, rng: Option<&mut Rng>) -> f64 {
    debug_assert!(
        is_representable(a, fmt) && is_representable(b, fmt),
        "operands {a:e}, {b:e} are not representable in {fmt}"
    );
    let exact = match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Fma => {
            let c = c.expect("fma requires a third operand");
            debug_assert!(is_representable(c, fmt));
            a.mul_add(b, c)
        }
    };
    round_value(exact, fmt, rng)
}

/// Mean of `trials` independent stochastic roundings of `x`.
///
/// The format's rounding mode is overridden with stochastic rounding.
pub fn stochastic_expectation_probe(x: f64, fmt: &Format, rng: &mut Rng, trials: usize) -> f64 {
    assert!(trials >= 1, "at least one trial is required");
    let sr = fmt.with_rounding(Rounding::Stochastic);
    let mut sum = 0.0;
    for _ in 0..trials {
        sum += round_value(x, &sr, Some(rng));
    }
    sum / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const RN: Rounding = Rounding::NearestEven;

    fn fp16(mode: Rounding) -> Format {
        Format::FP16.with_rounding(mode)
    }

    #[test]
    fn representable_is_fixed() {
        assert_eq!(round_value(1.0, &Format::FP16, None), 1.0);
        assert_eq!(round_value(-65504.0, &Format::FP16, None), -65504.0);
        assert_eq!(round_value(2f64.powi(-24), &Format::FP16, None), 2f64.powi(-24));
    }

    #[test]
    fn fp16_overflow() {
        assert_eq!(round_value(70000.0, &Format::FP16, None), f64::INFINITY);
        assert_eq!(round_value(-70000.0, &Format::FP16, None), f64::NEG_INFINITY);
        // 65520 is the midpoint between 65504 and 2^16: ties to even overflow.
        assert_eq!(round_value(65519.99, &Format::FP16, None), 65504.0);
        assert_eq!(round_value(65520.0, &Format::FP16, None), f64::INFINITY);
        assert_eq!(round_value(70000.0, &fp16(Rounding::TowardZero), None), 65504.0);
        assert_eq!(round_value(70000.0, &fp16(Rounding::TowardNegative), None), 65504.0);
        assert_eq!(round_value(-70000.0, &fp16(Rounding::TowardPositive), None), -65504.0);
        assert_eq!(round_value(-70000.0, &fp16(Rounding::TowardNegative), None), f64::NEG_INFINITY);
    }

    #[test]
    fn fp16_subnormal_tie_goes_to_zero() {
        assert_eq!(round_value(2f64.powi(-25), &Format::FP16, None), 0.0);
        assert_eq!(round_value(3.0 * 2f64.powi(-25), &Format::FP16, None), 2f64.powi(-23));
        assert_eq!(round_value(2f64.powi(-25), &fp16(Rounding::TowardPositive), None), 2f64.powi(-24));
    }

    #[test]
    fn flush_without_subnormals() {
        let f = Format::FP16.with_subnormals(false);
        let xmin = f.x_min();
        assert_eq!(round_value(0.3 * xmin, &f, None), 0.0);
        assert_eq!(round_value(0.7 * xmin, &f, None), xmin);
        assert_eq!(round_value(-0.7 * xmin, &f, None), -xmin);
        assert_eq!(round_value(0.5 * xmin, &f, None), 0.0);
        assert_eq!(round_value(1.5 * xmin, &f, None), 1.5 * xmin);
    }

    #[test]
    fn specials_pass_through() {
        assert!(round_value(f64::NAN, &Format::FP16, None).is_nan());
        assert_eq!(round_value(f64::INFINITY, &Format::FP16, None), f64::INFINITY);
        assert_eq!(round_value(-0.0, &Format::FP16, None).to_bits(), (-0.0f64).to_bits());
        // negative underflow keeps its sign
        assert_eq!(round_value(-1e-30, &Format::FP16, None).to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn bf16_matches_bit_truncation_oracle() {
        // Independent oracle for normal-range values: keep the top 7 of the 52
        // binary64 fraction bits, ties to even, letting the carry ripple into
        // the exponent field.
        fn bf16_oracle(x: f64) -> f64 {
            let b = x.to_bits();
            let lsb = (b >> 45) & 1;
            let rounded = (b + (1u64 << 44) - 1 + lsb) & !((1u64 << 45) - 1);
            f64::from_bits(rounded)
        }
        assert_eq!(round_value(0.1, &Format::BF16, None), 0.10009765625);
        for x in [0.1, -0.1, 1.0 / 3.0, 3.14159, 1e-3, 123456.0, 1.0 + 2f64.powi(-8)] {
            assert_eq!(round_value(x, &Format::BF16, None), bf16_oracle(x), "x = {x}");
        }
    }

    #[test]
    fn rounded_add_tie_to_even() {
        assert_eq!(rounded_op(Op::Add, 1.0, 2.0, None, &Format::FP16, None), 3.0);
        let half_ulp = 2f64.powi(-11);
        assert_eq!(rounded_op(Op::Add, 1.0, half_ulp, None, &Format::FP16, None), 1.0);
        assert_eq!(
            rounded_op(Op::Add, 1.0 + 2f64.powi(-10), half_ulp, None, &Format::FP16, None),
            1.0 + 2f64.powi(-9)
        );
        assert_eq!(rounded_op(Op::Mul, 256.0, 256.0, None, &Format::FP16, None), f64::INFINITY);
        assert_eq!(rounded_op(Op::Div, 1.0, 0.0, None, &Format::FP16, None), f64::INFINITY);
        assert!(rounded_op(Op::Div, 0.0, 0.0, None, &Format::FP16, None).is_nan());
        assert_eq!(rounded_op(Op::Fma, 2.0, 3.0, Some(1.0), &Format::FP16, None), 7.0);
    }

    #[test]
    fn fma_rounds_once() {
        // (1 + 2^-10)^2 = 1 + 2^-9 + 2^-20; subtracting 1 + 2^-9 leaves 2^-20 only with a fused op.
        let a = 1.0 + 2f64.powi(-10);
        let c = -(1.0 + 2f64.powi(-9));
        let fused = rounded_op(Op::Fma, a, a, Some(c), &Format::FP16, None);
        assert_eq!(fused, 2f64.powi(-20));
        let prod = rounded_op(Op::Mul, a, a, None, &Format::FP16, None);
        assert_eq!(rounded_op(Op::Add, prod, c, None, &Format::FP16, None), 0.0);
    }

    #[test]
    fn stochastic_outputs_are_neighbours() {
        let f = Format::FP16.with_rounding(Rounding::Stochastic);
        let mut rng = Rng::new(3);
        let x = 1.0 + 0.3 * 2f64.powi(-10);
        for _ in 0..1000 {
            let r = round_value(x, &f, Some(&mut rng));
            assert!(r == 1.0 || r == 1.0 + 2f64.powi(-10));
        }
    }

    #[test]
    fn stochastic_is_reproducible() {
        let f = Format::BF16.with_rounding(Rounding::Stochastic);
        let draw = |seed| {
            let mut rng = Rng::new(seed);
            (0..64).map(|i| round_value(0.1 * i as f64, &f, Some(&mut rng))).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn probe_on_representable_value() {
        let mut rng = Rng::new(9);
        assert_eq!(stochastic_expectation_probe(0.5, &Format::FP16, &mut rng, 17), 0.5);
    }

    #[test]
    fn nearest_is_default_rounding() {
        assert_eq!(Format::FP16.rounding(), RN);
    }
}
