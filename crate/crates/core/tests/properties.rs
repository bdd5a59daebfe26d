//! Property tests for the invariants the modules promise.

use mplab_core::dense::{chol_half, equilibrate, lu_emulated, scale_round, DenseMatrix};
use mplab_core::eig::sice_refine;
use mplab_core::prec::round_value;
use mplab_core::qilu::{mulhi32, qilu_factor};
use mplab_core::refine::{backward_error, gmres_ir_solve, ir_solve, Inner, IrConfig};
use mplab_core::sparse::{
    block_jacobi_apply, block_jacobi_build, compress_clustered_with, kmeans1d_detailed, spmv, spmv_clustered, CsrMatrix,
    STORAGE_LADDER,
};
use mplab_core::{Arith, Format, Rng, Rounding};
use proptest::prelude::*;

fn format() -> impl Strategy<Value = Format> {
    prop_oneof![
        Just(Format::FP16),
        Just(Format::BF16),
        Just(Format::FP32),
        (2u32..=11, 1u32..=20).prop_map(|(e, s)| Format::new(e, s).unwrap()),
    ]
}

fn mode() -> impl Strategy<Value = Rounding> {
    prop::sample::select(Rounding::DETERMINISTIC.to_vec())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        -1e6f64..1e6,
        -1e-6f64..1e-6,
    ]
}

fn random(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = Rng::new(seed);
    DenseMatrix::from_fn(n, n, |_, _| rng.uniform_open(-1.0, 1.0))
}

/// Half the spacing of `fmt` at magnitude `x`.
fn half_ulp(x: f64, fmt: Format) -> f64 {
    let x = x.abs();
    let e = if x == 0.0 {
        fmt.emin()
    } else {
        (x.log2().floor() as i32).max(fmt.emin())
    };
    2f64.powi(e - fmt.sig_bits() as i32 - 1)
}

proptest! {
    #[test]
    fn rounding_is_idempotent(x in finite(), fmt in format(), m in mode()) {
        let f = fmt.with_rounding(m);
        let once = round_value(x, &f, None);
        prop_assert_eq!(round_value(once, &f, None).to_bits(), once.to_bits());
    }

    #[test]
    fn rounding_is_monotone(a in finite(), b in finite(), fmt in format(), m in mode()) {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let f = fmt.with_rounding(m);
        prop_assert!(round_value(x, &f, None) <= round_value(y, &f, None));
    }

    #[test]
    fn nearest_rounding_error_is_bounded(
        fmt in format(),
        frac in 1.0f64..2.0,
        t in 0.0f64..1.0,
        negative in any::<bool>(),
    ) {
        let e = fmt.emin() + ((fmt.emax() - fmt.emin()) as f64 * t) as i32;
        let x = if negative { -frac } else { frac } * 2f64.powi(e);
        let r = round_value(x, &fmt, None);
        prop_assert!((r - x).abs() <= fmt.unit_roundoff() * x.abs(), "{x:e} -> {r:e}");
    }

    #[test]
    fn stochastic_result_is_a_neighbour(x in finite(), fmt in format(), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let r = round_value(x, &fmt.with_rounding(Rounding::Stochastic), Some(&mut rng));
        let down = round_value(x, &fmt.with_rounding(Rounding::TowardNegative), None);
        let up = round_value(x, &fmt.with_rounding(Rounding::TowardPositive), None);
        prop_assert!(r == down || r == up, "{x:e} -> {r:e}, neighbours {down:e}, {up:e}");
    }

    #[test]
    fn mulhi_is_the_floor_of_the_high_word(i in any::<i32>(), j in any::<i32>()) {
        let exact = i64::from(i) * i64::from(j);
        prop_assert_eq!(i64::from(mulhi32(i, j)), exact.div_euclid(1 << 32));
    }
}

#[test]
fn mulhi_boundary_combinations() {
    let edges = [0, 1, -1, 1 << 30, -(1 << 30), i32::MAX, -i32::MAX, i32::MIN];
    for &i in &edges {
        for &j in &edges {
            let exact = i64::from(i) * i64::from(j);
            assert_eq!(i64::from(mulhi32(i, j)), exact >> 32, "{i} * {j}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lu_factors_are_representable(n in 1usize..9, seed in any::<u64>(), fmt in format()) {
        let a = random(n, seed);
        if let Ok(f) = lu_emulated(&a, fmt) {
            let ar = Arith::generic(fmt);
            for m in [&f.l, &f.u] {
                prop_assert!(m.data().iter().all(|&v| ar.round(v) == v || !v.is_finite()));
            }
        }
    }

    #[test]
    fn scale_round_stays_finite(
        n in 1usize..8,
        seed in any::<u64>(),
        theta in 0.01f64..=1.0,
        spread in 0.0f64..60.0,
        m in mode(),
        fmt in prop_oneof![Just(Format::FP16), Just(Format::BF16)],
    ) {
        let mut rng = Rng::new(seed);
        let a = DenseMatrix::from_fn(n, n, |_, _| {
            rng.uniform_open(-1.0, 1.0) * 10f64.powf(rng.uniform_open(-spread, spread))
        });
        let (r, s) = equilibrate(&a).unwrap();
        let h = scale_round(&a, &r, &s, theta, fmt.with_rounding(m)).unwrap();
        prop_assert!(h.a_h.is_finite());
    }

    #[test]
    fn chol_half_records_first_successful_shift(n in 2usize..10, seed in any::<u64>(), c0 in 1u64..8) {
        let mut rng = Rng::new(seed);
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.normal());
        let a = m.t_matmul(&m).symmetrized();
        if let Ok(res) = chol_half(&a, 0.1, c0, Format::FP16) {
            prop_assert_eq!(res.c_final, c0 << (res.attempts - 1));
            prop_assert!(res.r_factor.is_finite());
        }
    }

    #[test]
    fn converged_means_below_tolerance(
        n in 2usize..12,
        seed in any::<u64>(),
        fact in prop_oneof![Just(Format::FP16), Just(Format::BF16), Just(Format::FP32)],
        use_gmres in any::<bool>(),
    ) {
        let a = random(n, seed);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).recip()).collect();
        let cfg = IrConfig::new(fact, Format::FP64, Format::FP64).with_max_iters(10);
        let result = if use_gmres {
            gmres_ir_solve(&a, &b, &cfg.with_inner(Inner::gmres()))
        } else {
            ir_solve(&a, &b, &cfg)
        };
        if let Ok((x, rep)) = result {
            if rep.converged {
                prop_assert!(rep.final_backward_error() <= rep.tol);
                prop_assert!(backward_error(&a, &x, &b) <= rep.tol);
            }
        }
    }

    #[test]
    fn qilu_is_deterministic(n in 1usize..12, seed in any::<u64>(), r in 4u32..16) {
        let a = random(n, seed);
        prop_assert_eq!(qilu_factor(&a, r), qilu_factor(&a, r));
    }

    #[test]
    fn sice_keeps_the_pinned_component(n in 2usize..10, seed in any::<u64>()) {
        let a = random(n, seed).symmetrized();
        let mut rng = Rng::new(seed ^ 1);
        let x0: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        if let Ok(res) = sice_refine(&a, &x0, 0.3, 6) {
            prop_assert_eq!(res.x[res.s], 1.0);
        }
    }

    #[test]
    fn cluster_reconstruction_within_half_ulp(
        values in prop::collection::vec(-100.0f64..100.0, 1..200),
        k in 1usize..32,
        tau in prop_oneof![Just(0.0), 1e-6f64..1e-1],
        forced in prop_oneof![Just(None), Just(Some(Format::FP16)), Just(Some(Format::FP32))],
    ) {
        let trip: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i, i % 7, v)).collect();
        let a = CsrMatrix::from_triplets(values.len(), 7, &trip).unwrap();
        let cm = compress_clustered_with(&a, k, tau, &mut Rng::new(0), forced).unwrap();
        for (idx, (&v, &r)) in a.values().iter().zip(&cm.reconstructed_values()).enumerate() {
            let c = cm.centers[cm.ids[idx] as usize];
            let fmt = cm.format_of(idx);
            let bound = if fmt.is_binary64() { 0.0 } else { half_ulp(v - c, fmt) };
            // The final `c + residual` adds one binary64 rounding.
            prop_assert!((r - v).abs() <= bound + f64::EPSILON * v.abs(), "{v} -> {r} via {c}");
        }
    }

    #[test]
    fn kmeans_objective_never_increases(
        values in prop::collection::vec(-10.0f64..10.0, 2..300),
        k in 1usize..16,
        seed in any::<u64>(),
    ) {
        if let Ok(km) = kmeans1d_detailed(&values, k, 50, &mut Rng::new(seed)) {
            for w in km.objective.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-300, "{:?}", km.objective);
            }
        }
    }

    #[test]
    fn block_jacobi_is_linear_and_repeatable(
        n in 2usize..30,
        block in 1usize..8,
        seed in any::<u64>(),
        alpha in -4.0f64..4.0,
        beta in -4.0f64..4.0,
    ) {
        let mut rng = Rng::new(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.uniform()));
            if i > 0 {
                trip.push((i, i - 1, -1.0));
                trip.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &trip).unwrap();
        let p = block_jacobi_build(&a, block, 0.1).unwrap();
        let u: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();

        let pu = block_jacobi_apply(&p, &u);
        let pv = block_jacobi_apply(&p, &v);
        let pw = block_jacobi_apply(&p, &w);
        prop_assert_eq!(&pw, &block_jacobi_apply(&p, &w));
        let scale = pw.iter().chain(&pu).chain(&pv).fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            let combo = alpha * pu[i] + beta * pv[i];
            prop_assert!((pw[i] - combo).abs() <= 8.0 * n as f64 * f64::EPSILON * scale * (1.0 + alpha.abs() + beta.abs()));
        }
    }

    #[test]
    fn storage_ladder_rungs_dominate(n in 1usize..8, seed in any::<u64>(), spread in 0.0f64..12.0) {
        let mut rng = Rng::new(seed);
        let inv = DenseMatrix::from_fn(n, n, |_, _| {
            rng.uniform_open(-1.0, 1.0) * 10f64.powf(rng.uniform_open(-spread, spread))
        });
        // Each wider rung rounds with no more error, no overflow and no extra
        // flushed rows, so qualifying at a rung implies qualifying above it.
        let stats: Vec<(f64, bool, usize)> = STORAGE_LADDER
            .iter()
            .map(|&f| {
                let r = inv.rounded(&Arith::new(f));
                let zero_rows = (0..n).filter(|&i| r.row(i).iter().all(|&x| x == 0.0)).count();
                (r.sub(&inv).norm_fro(), r.is_finite(), zero_rows)
            })
            .collect();
        for w in stats.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if lo.1 {
                prop_assert!(hi.1 && hi.0 <= lo.0 && hi.2 <= lo.2);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_compression_reproduces_spmv_bitwise(
        values in prop::collection::vec(prop_oneof![-1e3f64..1e3, Just(0.5), Just(-2.0)], 1..150),
        k in 1usize..64,
        seed in any::<u64>(),
    ) {
        let cols = 11;
        let trip: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i / 3, (i * 5) % cols, v)).collect();
        let a = CsrMatrix::from_triplets(values.len() / 3 + 1, cols, &trip).unwrap();
        let cm = compress_clustered_with(&a, k, 0.0, &mut Rng::new(seed), None).unwrap();
        let recon = cm.reconstructed_values();
        prop_assert!(recon.iter().zip(a.values()).all(|(r, v)| r.to_bits() == v.to_bits()));

        let mut rng = Rng::new(seed ^ 7);
        let x: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
        let y = spmv_clustered(&cm, &x).unwrap();
        let y_ref = spmv(&a, &x, Format::FP64).unwrap();
        prop_assert!(y.iter().zip(&y_ref).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
