//! Property tests for the library invariants: correlation bounds and
//! symmetries, trend-fit algebra, T² affine invariance, special-function
//! identities, and natural-breaks stability.

use proptest::prelude::*;

use heatpanel_core::assoc::pearson;
use heatpanel_core::breaks::jenks_breaks;
use heatpanel_core::numerics::{f_cdf, reg_incomplete_beta, solve_spd, FParams, SpdMatrix};
use heatpanel_core::panel::TimeSeries;
use heatpanel_core::stat_test::{hotelling_t2, GroupedSamples};
use heatpanel_core::trend::ols_trend;

fn series(name: &str, values: Vec<f64>) -> TimeSeries {
    let times = (0..values.len() as i32).collect();
    TimeSeries::new("r", name, times, values).unwrap()
}

fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

fn value_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len)
}

proptest! {
    #[test]
    fn pearson_is_bounded_and_antisymmetric(
        xs in value_vec(3..24),
        ys in value_vec(3..24),
    ) {
        let n = xs.len().min(ys.len());
        let xs = &xs[..n];
        let ys = &ys[..n];
        prop_assume!(spread(xs) > 1e-9 && spread(ys) > 1e-9);
        let x = series("x", xs.to_vec());
        let y = series("y", ys.to_vec());
        let r = pearson(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        // negating one argument flips the sign
        let neg = series("negx", xs.iter().map(|v| -v).collect());
        let r_neg = pearson(&neg, &y).unwrap();
        prop_assert!((r + r_neg).abs() < 1e-12);
        // symmetry is exact
        prop_assert_eq!(r, pearson(&y, &x).unwrap());
    }

    #[test]
    fn pearson_ignores_positive_affine_rescaling(
        xs in value_vec(3..24),
        ys in value_vec(3..24),
        a in 0.01..50.0f64,
        b in -100.0..100.0f64,
    ) {
        let n = xs.len().min(ys.len());
        let xs = &xs[..n];
        let ys = &ys[..n];
        prop_assume!(spread(xs) > 1e-9 && spread(ys) > 1e-9);
        let x = series("x", xs.to_vec());
        let y = series("y", ys.to_vec());
        let scaled = series("ax+b", xs.iter().map(|v| a * v + b).collect());
        let r = pearson(&x, &y).unwrap();
        let r_scaled = pearson(&scaled, &y).unwrap();
        prop_assert!((r - r_scaled).abs() < 1e-12, "{} vs {}", r, r_scaled);
    }

    #[test]
    fn ols_slope_respects_time_and_value_algebra(
        ys in value_vec(3..24),
        shift in -500i32..500i32,
        add in -100.0..100.0f64,
    ) {
        let n = ys.len() as i32;
        let base = series("y", ys.clone());
        let t0 = ols_trend(&base).unwrap();

        // constant time shift leaves the slope unchanged
        let shifted = TimeSeries::new("r", "y", (0..n).map(|t| t + shift).collect(), ys.clone()).unwrap();
        let t1 = ols_trend(&shifted).unwrap();
        prop_assert!((t0.slope - t1.slope).abs() <= 1e-12 * (1.0 + t0.slope.abs()));

        // scaling times by 3 divides the slope by 3
        let stretched = TimeSeries::new("r", "y", (0..n).map(|t| t * 3).collect(), ys.clone()).unwrap();
        let t3 = ols_trend(&stretched).unwrap();
        prop_assert!((t0.slope / 3.0 - t3.slope).abs() <= 1e-12 * (1.0 + t0.slope.abs()));

        // adding a constant moves the intercept, not the slope
        let lifted = series("y+c", ys.iter().map(|v| v + add).collect());
        let t4 = ols_trend(&lifted).unwrap();
        prop_assert!((t0.slope - t4.slope).abs() <= 1e-12 * (1.0 + t0.slope.abs()));
        prop_assert!((t4.intercept - t0.intercept - add).abs() <= 1e-9);
    }

    #[test]
    fn ols_slope_is_linear_in_y(
        y1 in value_vec(4..16),
        y2 in value_vec(4..16),
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
    ) {
        let n = y1.len().min(y2.len());
        let s1 = ols_trend(&series("y1", y1[..n].to_vec())).unwrap().slope;
        let s2 = ols_trend(&series("y2", y2[..n].to_vec())).unwrap().slope;
        let combo: Vec<f64> = y1[..n].iter().zip(&y2[..n]).map(|(p, q)| a * p + b * q).collect();
        let sc = ols_trend(&series("combo", combo)).unwrap().slope;
        let expected = a * s1 + b * s2;
        prop_assert!((sc - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
            "{} vs {}", sc, expected);
    }

    #[test]
    fn incomplete_beta_complement_identity(
        x in 1e-6..1.0f64,
        a in 0.05..80.0f64,
        b in 0.05..80.0f64,
    ) {
        prop_assume!(x < 1.0);
        let lhs = reg_incomplete_beta(x, a, b).unwrap();
        let rhs = reg_incomplete_beta(1.0 - x, b, a).unwrap();
        prop_assert!((lhs + rhs - 1.0).abs() < 1e-10, "I={} I'={}", lhs, rhs);
    }

    #[test]
    fn f_reciprocal_law(
        x in 1e-3..1e3f64,
        d1 in 1usize..40,
        d2 in 1usize..40,
    ) {
        let lhs = f_cdf(x, FParams::new(d1, d2).unwrap()).unwrap();
        let rhs = f_cdf(1.0 / x, FParams::new(d2, d1).unwrap()).unwrap();
        prop_assert!((lhs + rhs - 1.0).abs() < 1e-9, "cdf={} mirror={}", lhs, rhs);
    }

    #[test]
    fn f_cdf_is_nondecreasing(
        d1 in 1usize..30,
        d2 in 1usize..30,
        start in 0.0..5.0f64,
        step in 0.01..2.0f64,
    ) {
        let params = FParams::new(d1, d2).unwrap();
        let mut prev = f_cdf(start, params).unwrap();
        for i in 1..12 {
            let next = f_cdf(start + step * i as f64, params).unwrap();
            prop_assert!(next + 1e-14 >= prev, "cdf decreased: {} -> {}", prev, next);
            prev = next;
        }
    }

    #[test]
    fn spd_solve_residual_bound(
        seed_rows in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 5), 5),
        v in prop::collection::vec(-10.0..10.0f64, 5),
    ) {
        // S = AᵀA + εI is positive definite by construction
        let p = 5;
        let mut entries = vec![0.0f64; p * p];
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for row in &seed_rows {
                    acc += row[i] * row[j];
                }
                entries[i * p + j] = acc;
            }
        }
        for i in 0..p {
            entries[i * p + i] += 0.5;
        }
        let s = SpdMatrix::new(p, entries).unwrap();
        let w = solve_spd(&s, &v).unwrap();
        let mut worst = 0.0f64;
        for (i, vi) in v.iter().enumerate() {
            let acc: f64 = w.iter().enumerate().map(|(j, wj)| s.get(i, j) * wj).sum();
            worst = worst.max((acc - vi).abs());
        }
        let v_inf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(worst <= 1e-8 * (1.0 + v_inf), "residual {}", worst);
    }

    #[test]
    fn t2_nonnegative_and_zero_iff_equal_means(
        obs in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 10..16),
    ) {
        let half = obs.len() / 2;
        prop_assume!(half >= 4);
        let g1 = obs[..half].to_vec();
        let g2 = obs[half..].to_vec();
        let samples = match GroupedSamples::new(g1.clone(), g2.clone()) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        if let Ok(t2) = hotelling_t2(&samples) {
            prop_assert!(t2 >= 0.0);
        }
        // forcing equal means drives the statistic to ~zero
        let mean = |g: &[Vec<f64>], j: usize| g.iter().map(|o| o[j]).sum::<f64>() / g.len() as f64;
        let delta: Vec<f64> = (0..3).map(|j| mean(&g1, j) - mean(&g2, j)).collect();
        let g2_aligned: Vec<Vec<f64>> = g2
            .iter()
            .map(|o| o.iter().zip(&delta).map(|(x, d)| x + d).collect())
            .collect();
        let aligned = GroupedSamples::new(g1, g2_aligned).unwrap();
        if let Ok(t2) = hotelling_t2(&aligned) {
            prop_assert!(t2.abs() < 1e-12, "aligned means left t2 = {}", t2);
        }
    }

    #[test]
    fn jenks_assignment_is_permutation_invariant(
        mut values in prop::collection::vec(-50.0..50.0f64, 5..20),
        k in 1usize..5,
        rot in 0usize..16,
    ) {
        let distinct = {
            let mut s = values.clone();
            s.sort_by(f64::total_cmp);
            s.dedup();
            s.len()
        };
        prop_assume!(distinct >= k);
        let before = jenks_breaks(&values, k).unwrap();
        let mut pairs_before: Vec<(f64, usize)> =
            values.iter().copied().zip(before.labels.iter().copied()).collect();
        let steps = rot % values.len();
        values.rotate_left(steps);
        let after = jenks_breaks(&values, k).unwrap();
        let mut pairs_after: Vec<(f64, usize)> =
            values.iter().copied().zip(after.labels.iter().copied()).collect();
        pairs_before.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        pairs_after.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        prop_assert_eq!(pairs_before, pairs_after);
        prop_assert_eq!(before.sdcm, after.sdcm);
    }
}

#[test]
fn t2_affine_invariance_under_well_conditioned_transforms() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    let mut rng = StdRng::seed_from_u64(20240817);
    for case in 0..60 {
        let p = 1 + case % 4;
        let n1 = 5 + case % 4;
        let n2 = 5 + (case / 2) % 4;
        let group = |n: usize, shift: f64, rng: &mut StdRng| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..p).map(|_| rng.gen_range(-3.0..3.0) + shift).collect())
                .collect()
        };
        let g1 = group(n1, 0.0, &mut rng);
        let g2 = group(n2, 1.5, &mut rng);
        let t2_raw = hotelling_t2(&GroupedSamples::new(g1.clone(), g2.clone()).unwrap()).unwrap();

        // well-conditioned A: random entries with a dominant diagonal
        let mut a = vec![0.0f64; p * p];
        for i in 0..p {
            for j in 0..p {
                a[i * p + j] = rng.gen_range(-1.0..1.0);
            }
            a[i * p + i] += (p + 1) as f64;
        }
        let b: Vec<f64> = (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let transform = |g: &[Vec<f64>]| -> Vec<Vec<f64>> {
            g.iter()
                .map(|o| {
                    (0..p)
                        .map(|i| (0..p).map(|j| a[i * p + j] * o[j]).sum::<f64>() + b[i])
                        .collect()
                })
                .collect()
        };
        let t2_mapped =
            hotelling_t2(&GroupedSamples::new(transform(&g1), transform(&g2)).unwrap()).unwrap();
        let diff = (t2_raw - t2_mapped).abs();
        assert!(
            diff <= 1e-8 * (1.0 + t2_raw),
            "case {case}: {t2_raw} vs {t2_mapped}"
        );
    }
}
