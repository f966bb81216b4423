//! Outcome statistics: rank correlation, standardization, simple OLS and
//! consecutive differences.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub n: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Degenerate(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min_len {
        return Err(Error::Degenerate(format!(
            "need at least {min_len} observations, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Tie-corrected Spearman correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 3)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Center to mean 0 and scale to sample sd 1 (n - 1 denominator).
pub fn standardize(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::Degenerate(format!(
            "standardize needs at least 2 values, got {}",
            v.len()
        )));
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|a| (a - m) * (a - m)).sum();
    if ss == 0.0 {
        return Err(Error::Degenerate(
            "cannot standardize a constant vector".into(),
        ));
    }
    let sd = (ss / (v.len() - 1) as f64).sqrt();
    Ok(v.iter().map(|a| (a - m) / sd).collect())
}

/// Least-squares fit of `y = intercept + slope * x` with the classical slope SE.
pub fn ols_simple(y: &[f64], x: &[f64]) -> Result<RegressionResult> {
    check_pair(x, y, 3)?;
    let n = x.len();
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("regression predictor is constant".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_se = (rss / (n - 2) as f64 / sxx).sqrt();
    Ok(RegressionResult {
        slope,
        intercept,
        slope_se,
        n,
    })
}

/// `out[i] = values[i + 1] - values[i]`.
pub fn delta_series(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "delta series needs at least 2 values, got {}",
            values.len()
        )));
    }
    Ok(values.windows(2).map(|w| w[1] - w[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Pearson on ranks written out longhand, kept apart from `pearson`.
    fn rank_pearson_oracle(rx: &[f64], ry: &[f64]) -> f64 {
        let n = rx.len() as f64;
        let (sx, sy): (f64, f64) = (rx.iter().sum(), ry.iter().sum());
        let sxy: f64 = rx.iter().zip(ry).map(|(a, b)| a * b).sum();
        let sxx: f64 = rx.iter().map(|a| a * a).sum();
        let syy: f64 = ry.iter().map(|a| a * a).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[1.0, 1.0, 2.0, 2.0]),
            vec![1.5, 1.5, 3.5, 3.5]
        );
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(
            average_ranks(&[5.0, 5.0, 5.0, 0.0]),
            vec![3.0, 3.0, 3.0, 1.0]
        );
    }

    #[test]
    fn spearman_examples() {
        assert_abs_diff_eq!(
            spearman(&[1., 2., 3.], &[10., 20., 30.]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spearman(&[1., 2., 3.], &[3., 2., 1.]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        // oracle: ranks [1,2,3,4] vs [1.5,1.5,3.5,3.5] -> 4/sqrt(20) = 0.894427191
        let oracle = rank_pearson_oracle(&[1., 2., 3., 4.], &[1.5, 1.5, 3.5, 3.5]);
        assert_abs_diff_eq!(oracle, 0.894_427_190_999_915_9, epsilon = 1e-12);
        let got = spearman(&[1., 2., 3., 4.], &[1., 1., 2., 2.]).unwrap();
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-9);
    }

    #[test]
    fn spearman_degenerate_inputs() {
        assert!(matches!(
            spearman(&[1., 2.], &[1., 2.]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            spearman(&[1., 2., 3.], &[1., 2.]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            spearman(&[1., 2., 3.], &[4., 4., 4.]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&[1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(s[0], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(standardize(&[0.0, 1.0, 2.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(matches!(
            standardize(&[5.0, 5.0, 5.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(standardize(&[5.0]).is_err());
    }

    #[test]
    fn ols_examples() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let fit = ols_simple(&x, &x).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.slope_se, 0.0, epsilon = 1e-12);
        assert_eq!(fit.n, 10);

        // Sxx = 5, Sxy = 3, RSS = 0.2 -> se = sqrt(0.2 / 2 / 5)
        let fit = ols_simple(&[1., 2., 2., 3.], &[1., 2., 3., 4.]).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.intercept, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.slope_se, (0.2f64 / 2.0 / 5.0).sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(fit.slope_se, 0.141_421_356_237_309_5, epsilon = 1e-9);

        assert!(matches!(
            ols_simple(&[1., 2., 3.], &[2., 2., 2.]),
            Err(Error::Degenerate(_))
        ));
        assert!(ols_simple(&[1., 2.], &[1., 2.]).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = delta_series(&[0.5, 0.7, 0.8]).unwrap();
        assert_abs_diff_eq!(d[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.1, epsilon = 1e-15);
        assert_eq!(delta_series(&[3.0; 5]).unwrap(), vec![0.0; 4]);
        assert!(matches!(
            delta_series(&[1.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    fn tied_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0i32..6).prop_map(f64::from), len)
    }

    fn paired(min: usize, max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (min..max).prop_flat_map(|n| (tied_vec(n), tied_vec(n)))
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_increasing_maps((x, y) in paired(3, 60)) {
            if let Ok(base) = spearman(&x, &y) {
                let ey: Vec<f64> = y.iter().map(|v| v.exp()).collect();
                let ly: Vec<f64> = y.iter().map(|v| 2.0 * v + 7.0).collect();
                prop_assert!((spearman(&x, &ey).unwrap() - base).abs() < 1e-12);
                prop_assert!((spearman(&x, &ly).unwrap() - base).abs() < 1e-12);
                prop_assert!((spearman(&y, &x).unwrap() - base).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&base));
                let oracle = rank_pearson_oracle(&average_ranks(&x), &average_ranks(&y));
                prop_assert!((base - oracle).abs() < 1e-9);
            }
        }

        #[test]
        fn standardized_slope_is_pearson(
            x in prop::collection::vec(-5.0f64..5.0, 3..80),
            noise in prop::collection::vec(-1.0f64..1.0, 80),
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| 0.3 * a + e).collect();
            if let (Ok(zx), Ok(zy)) = (standardize(&x), standardize(&y)) {
                let fit = ols_simple(&zy, &zx).unwrap();
                let r = pearson(&x, &y).unwrap();
                prop_assert!((fit.slope - r).abs() < 1e-12);
                let m = zx.iter().sum::<f64>() / zx.len() as f64;
                prop_assert!(m.abs() < 1e-12);
                let var = zx.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (zx.len() - 1) as f64;
                prop_assert!((var - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn delta_telescopes(v in prop::collection::vec(-10.0f64..10.0, 2..50)) {
            let d = delta_series(&v).unwrap();
            prop_assert_eq!(d.len(), v.len() - 1);
            let sum: f64 = d.iter().sum();
            prop_assert!((sum - (v[v.len() - 1] - v[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn slope_se_under_duplication() {
        let x: Vec<f64> = (0..25).map(|i| ((i * 37) % 25) as f64 / 5.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, a)| 0.8 * a + ((i * 13) % 7) as f64 / 3.0)
            .collect();
        let n = x.len();
        let base = ols_simple(&y, &x).unwrap();
        for m in [2usize, 3, 10] {
            let xd: Vec<f64> = x.iter().cycle().take(n * m).copied().collect();
            let yd: Vec<f64> = y.iter().cycle().take(n * m).copied().collect();
            let dup = ols_simple(&yd, &xd).unwrap();
            // recompute from raw sums of the duplicated data
            let mx = xd.iter().sum::<f64>() / xd.len() as f64;
            let sxx: f64 = xd.iter().map(|a| (a - mx) * (a - mx)).sum();
            let rss: f64 = xd
                .iter()
                .zip(&yd)
                .map(|(a, b)| (b - dup.intercept - dup.slope * a).powi(2))
                .sum();
            let direct = (rss / (n * m - 2) as f64 / sxx).sqrt();
            assert_abs_diff_eq!(dup.slope_se, direct, epsilon = 1e-12);
            assert_abs_diff_eq!(dup.slope, base.slope, epsilon = 1e-12);
            let ratio = dup.slope_se / base.slope_se;
            let expected = ((n - 2) as f64 / (n * m - 2) as f64).sqrt();
            assert_abs_diff_eq!(ratio, expected, epsilon = 1e-10);
            // roughly 1/sqrt(m) for moderate n
            assert!((ratio * (m as f64).sqrt() - 1.0).abs() < 0.05);
        }
    }
}
