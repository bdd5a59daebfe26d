use std::cell::{Cell, RefCell};

use super::format::{Format, Rounding};
use super::rng::Rng;
use super::round::{is_representable, round_value};

/// Seed used by [`Arith::new`] when the format rounds stochastically.
pub const DEFAULT_STOCHASTIC_SEED: u64 = 0x5eed_0f_5eed;

thread_local! {
    static OP_COUNT: Cell<u64> = const { Cell::new(0) };
}

/// Number of rounded scalar operations performed through any [`Arith`] on
/// this thread since the last [`reset_op_count`].
pub fn op_count() -> u64 {
    OP_COUNT.with(Cell::get)
}

pub fn reset_op_count() {
    OP_COUNT.with(|c| c.set(0));
}

#[inline]
fn tick() {
    OP_COUNT.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Path {
    /// Rounding is the identity.
    Binary64,
    /// Native `f64 -> f32` conversion coincides with the emulated format.
    Binary32,
    Generic,
}

/// Arithmetic unit for one emulated format: each method performs the exact
/// binary64 operation and rounds once.
///
/// Kernels use this instead of calling [`rounded_op`](super::rounded_op) so
/// that the identity and binary32 cases take a native path. Results are the
/// same as the generic path (checked by the test-suite).
#[derive(Debug)]
pub struct Arith {
    fmt: Format,
    path: Path,
    rng: RefCell<Option<Rng>>,
}

impl Arith {
    pub fn new(fmt: Format) -> Arith {
        Arith::with_rng(fmt, Rng::new(DEFAULT_STOCHASTIC_SEED))
    }

    pub fn with_rng(fmt: Format, rng: Rng) -> Arith {
        let path = if fmt.is_binary64() {
            Path::Binary64
        } else if fmt == Format::FP32 {
            Path::Binary32
        } else {
            Path::Generic
        };
        let rng = (fmt.rounding() == Rounding::Stochastic).then_some(rng);
        Arith {
            fmt,
            path,
            rng: RefCell::new(rng),
        }
    }

    /// Arithmetic that always takes the bit-level rounding path.
    pub fn generic(fmt: Format) -> Arith {
        let mut a = Arith::new(fmt);
        if a.path != Path::Binary64 {
            a.path = Path::Generic;
        }
        a
    }

    pub fn format(&self) -> Format {
        self.fmt
    }

    #[inline]
    pub fn round(&self, x: f64) -> f64 {
        match self.path {
            Path::Binary64 => x,
            Path::Binary32 => x as f32 as f64,
            Path::Generic => {
                let mut rng = self.rng.borrow_mut();
                round_value(x, &self.fmt, rng.as_mut())
            }
        }
    }

    pub fn round_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.round(x)).collect()
    }

    #[inline]
    fn representable(&self, x: f64) -> bool {
        match self.path {
            Path::Binary64 => true,
            Path::Binary32 => x as f32 as f64 == x || x.is_nan(),
            Path::Generic => is_representable(x, &self.fmt),
        }
    }

    #[inline]
    fn check(&self, a: f64, b: f64) {
        tick();
        debug_assert!(
            self.representable(a) && self.representable(b),
            "operands {a:e}, {b:e} are not representable in {}",
            self.fmt
        );
    }

    #[inline]
    pub fn add(&self, a: f64, b: f64) -> f64 {
        self.check(a, b);
        self.round(a + b)
    }

    #[inline]
    pub fn sub(&self, a: f64, b: f64) -> f64 {
        self.check(a, b);
        self.round(a - b)
    }

    #[inline]
    pub fn mul(&self, a: f64, b: f64) -> f64 {
        self.check(a, b);
        self.round(a * b)
    }

    #[inline]
    pub fn div(&self, a: f64, b: f64) -> f64 {
        self.check(a, b);
        self.round(a / b)
    }

    #[inline]
    pub fn fma(&self, a: f64, b: f64, c: f64) -> f64 {
        self.check(a, b);
        debug_assert!(self.representable(c));
        self.round(a.mul_add(b, c))
    }

    #[inline]
    pub fn sqrt(&self, a: f64) -> f64 {
        self.check(a, 0.0);
        self.round(a.sqrt())
    }

    /// Dot product accumulated left to right, one rounding per multiply and per add.
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        x.iter()
            .zip(y)
            .fold(0.0, |acc, (&a, &b)| self.add(acc, self.mul(a, b)))
    }

    /// Euclidean norm, `sqrt(x . x)` in this format.
    pub fn norm2(&self, x: &[f64]) -> f64 {
        self.sqrt(self.dot(x, x))
    }

    /// `y <- y + alpha * x`.
    pub fn axpy(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = self.add(*yi, self.mul(alpha, xi));
        }
    }

    /// `x <- alpha * x`.
    pub fn scale(&self, alpha: f64, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi = self.mul(alpha, *xi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_paths_agree_with_generic() {
        let mut rng = Rng::new(5);
        let fast = Arith::new(Format::FP32);
        let slow = Arith::generic(Format::FP32);
        for _ in 0..20_000 {
            let mag = (rng.uniform() * 300.0 - 150.0).exp2();
            let x = (rng.uniform() - 0.5) * mag;
            assert_eq!(fast.round(x).to_bits(), slow.round(x).to_bits(), "x = {x:e}");
        }
        for x in [f32::MAX as f64 * 1.000001, 1e-45, 7e-46, 1.4e-45, f64::MIN_POSITIVE] {
            assert_eq!(fast.round(x).to_bits(), slow.round(x).to_bits(), "x = {x:e}");
        }
    }

    #[test]
    fn dot_rounds_every_step() {
        let ar = Arith::new(Format::FP16);
        // 2048 + 1 is not representable in binary16: the sum stalls at 2048.
        let ones = vec![1.0; 4096];
        assert_eq!(ar.dot(&ones, &ones), 2048.0);
        let exact = Arith::new(Format::FP64);
        assert_eq!(exact.dot(&ones, &ones), 4096.0);
    }

    #[test]
    fn operations_are_counted() {
        let ar = Arith::new(Format::FP16);
        reset_op_count();
        ar.dot(&[1.0; 10], &[2.0; 10]);
        assert_eq!(op_count(), 20);
        ar.round(3.0);
        assert_eq!(op_count(), 20);
    }

    #[test]
    fn stochastic_arith_is_seeded() {
        let f = Format::FP16.with_rounding(Rounding::Stochastic);
        let run = || {
            let ar = Arith::new(f);
            (0..32).map(|i| ar.round(0.01 * i as f64)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
