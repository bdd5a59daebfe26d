//! Exhaustive differential test of binary16 rounding against the `half` crate.

use half::f16;
use mplab_core::prec::{is_representable, round_value};
use mplab_core::{Format, Rounding};

fn finite_payloads() -> impl Iterator<Item = f16> {
    (0..=u16::MAX).map(f16::from_bits).filter(|h| h.is_finite())
}

/// Binary16 neighbour above `h` (toward +∞).
fn next_up(h: f16) -> f16 {
    let b = h.to_bits();
    f16::from_bits(match b {
        0x8000 => 0x0001,
        b if b & 0x8000 == 0 => b + 1,
        b => b - 1,
    })
}

#[test]
fn every_payload_is_a_fixed_point_in_every_mode() {
    for mode in Rounding::DETERMINISTIC {
        let fmt = Format::FP16.with_rounding(mode);
        for h in (0..=u16::MAX).map(f16::from_bits).filter(|h| !h.is_nan()) {
            let x = h.to_f64();
            let y = round_value(x, &fmt, None);
            assert_eq!(y.to_bits(), x.to_bits(), "{} moved {x:e} to {y:e}", mode.name());
            assert!(is_representable(x, &fmt));
        }
    }
}

#[test]
fn nearest_even_matches_half_between_every_pair() {
    let fmt = Format::FP16;
    for h in finite_payloads() {
        let up = next_up(h);
        if !up.is_finite() {
            continue;
        }
        let (a, b) = (h.to_f64(), up.to_f64());
        for t in [0.125, 0.25, 0.5, 0.75, 0.875] {
            let x = a + t * (b - a);
            let want = f16::from_f64(x).to_f64();
            let got = round_value(x, &fmt, None);
            assert_eq!(got.to_bits(), want.to_bits(), "round({x:e}) = {got:e}, half gives {want:e}");
        }
    }
}

#[test]
fn directed_modes_pick_the_bracketing_neighbour() {
    for h in finite_payloads() {
        let up = next_up(h);
        if !up.is_finite() {
            continue;
        }
        let (a, b) = (h.to_f64(), up.to_f64());
        let x = a + 0.5 * (b - a);
        let toward_zero = if x > 0.0 { a } else { b };
        for (mode, want) in [
            (Rounding::TowardPositive, b),
            (Rounding::TowardNegative, a),
            (Rounding::TowardZero, toward_zero),
        ] {
            let got = round_value(x, &Format::FP16.with_rounding(mode), None);
            // A zero result keeps the sign of the input.
            let want = if want == 0.0 { 0.0f64.copysign(x) } else { want };
            assert_eq!(got.to_bits(), want.to_bits(), "{}({x:e}) = {got:e}, expected {want:e}", mode.name());
        }
    }
}

// `half` converts binary64 through binary32 when F16C is available, so the
// comparisons above and below only use inputs exact in binary32.
#[test]
fn overflow_threshold_matches_half() {
    let max = f16::MAX.to_f64();
    let ulp = 32.0;
    for x in [max + 0.25 * ulp, max + 0.5 * ulp - 2f64.powi(-8), max + 0.5 * ulp, max + ulp, 1e10] {
        for s in [1.0, -1.0] {
            let got = round_value(s * x, &Format::FP16, None);
            let want = f16::from_f64(s * x).to_f64();
            assert_eq!(got, want, "round({:e})", s * x);
        }
    }
}

#[test]
fn just_below_overflow_midpoint_stays_finite() {
    // 65520 is the midpoint between the largest binary16 value and the next
    // step of the exponent range; anything below it rounds down.
    let x = 65519.999999999;
    assert_eq!(round_value(x, &Format::FP16, None), 65504.0);
    assert_eq!(round_value(-x, &Format::FP16, None), -65504.0);
    assert_eq!(round_value(65520.0, &Format::FP16, None), f64::INFINITY);
}
