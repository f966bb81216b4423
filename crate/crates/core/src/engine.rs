//! Condition grid execution.
//!
//! A replication draws true scores, generates J identical items' responses,
//! builds the external predictor and computes the outcome statistics. Cells
//! and replications are independent work units; every random draw comes from
//! a stream keyed by `(cell_seed, rep_index, attempt)` so results do not
//! depend on scheduling or worker count.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grm::{sample_response_matrix, Item, LatentSample};
use crate::seeding::{derive_cell_seed, replication_rng};
use crate::stats::{ols_simple, spearman, standardize};

/// Regenerations allowed per replication before giving up on a cell.
pub const MAX_ATTEMPTS: u32 = 1000;

/// External predictor `x = coefficient * theta + Normal(0, noise_sd)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSpec {
    coefficient: f64,
    noise_sd: f64,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        PredictorSpec {
            coefficient: 0.5,
            noise_sd: 0.2,
        }
    }
}

impl PredictorSpec {
    pub fn new(coefficient: f64, noise_sd: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "predictor coefficient must be finite, got {coefficient}"
            )));
        }
        if !(noise_sd.is_finite() && noise_sd > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "predictor noise sd must be positive, got {noise_sd}"
            )));
        }
        Ok(PredictorSpec {
            coefficient,
            noise_sd,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Population correlation between theta and the predictor.
    ///
    /// This is the slope an error-free continuous measure would show after
    /// both sides are standardized, and is the reference for slope bias.
    pub fn reference_slope(&self) -> f64 {
        self.coefficient / self.coefficient.hypot(self.noise_sd)
    }
}

/// One point of the design grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCell {
    pub num_categories: u32,
    pub sigma: f64,
    pub num_items: u32,
    pub sample_size: u32,
    pub replications: u32,
    pub cell_seed: u64,
}

/// Identity of a cell for duplicate detection and ordering.
pub type CellKey = (u32, u64, u32, u32);

impl ConditionCell {
    pub fn new(
        num_categories: u32,
        sigma: f64,
        num_items: u32,
        sample_size: u32,
        replications: u32,
    ) -> Result<Self> {
        if num_categories < 2 {
            return Err(Error::InvalidArgument(format!(
                "K must be at least 2, got {num_categories}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if num_items < 1 {
            return Err(Error::InvalidArgument("need at least one item".into()));
        }
        if sample_size < 10 {
            return Err(Error::InvalidArgument(format!(
                "sample size must be at least 10, got {sample_size}"
            )));
        }
        if replications < 1 {
            return Err(Error::InvalidArgument(
                "need at least one replication".into(),
            ));
        }
        Ok(ConditionCell {
            num_categories,
            sigma,
            num_items,
            sample_size,
            replications,
            cell_seed: 0,
        })
    }

    /// Same cell with its seed derived from `master_seed`.
    pub fn seeded(mut self, master_seed: u64) -> Self {
        self.cell_seed = derive_cell_seed(
            master_seed,
            self.num_categories,
            self.sigma,
            self.num_items,
            self.sample_size,
        );
        self
    }

    pub fn key(&self) -> CellKey {
        (
            self.num_categories,
            self.sigma.to_bits(),
            self.num_items,
            self.sample_size,
        )
    }

    /// Sort order used for output: k, sigma, items, n.
    pub fn output_order(&self, other: &Self) -> std::cmp::Ordering {
        self.num_categories
            .cmp(&other.num_categories)
            .then(self.sigma.total_cmp(&other.sigma))
            .then(self.num_items.cmp(&other.num_items))
            .then(self.sample_size.cmp(&other.sample_size))
    }

    fn items(&self) -> Result<Vec<Item>> {
        let item = Item::with_categories(self.sigma, self.num_categories)?;
        Ok(vec![item; self.num_items as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationResult {
    pub spearman_true_obs: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub slope_bias: f64,
    pub discarded_regenerations: u32,
}

/// Mean and sample sd (n - 1; zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Moments { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: ConditionCell,
    pub replications_used: u32,
    pub spearman: Moments,
    pub slope: Moments,
    pub slope_se: Moments,
    pub bias: Moments,
    pub discards: u64,
}

pub fn summarize(cell: ConditionCell, reps: &[ReplicationResult]) -> CellSummary {
    CellSummary {
        cell,
        replications_used: reps.len() as u32,
        spearman: Moments::of(reps.iter().map(|r| r.spearman_true_obs)),
        slope: Moments::of(reps.iter().map(|r| r.slope)),
        slope_se: Moments::of(reps.iter().map(|r| r.slope_se)),
        bias: Moments::of(reps.iter().map(|r| r.slope_bias)),
        discards: reps.iter().map(|r| r.discarded_regenerations as u64).sum(),
    }
}

/// One attempt at a replication with a caller-supplied generator.
///
/// Returns `Error::Degenerate` when the sample has no usable variation.
pub fn simulate_once<R: Rng + ?Sized>(
    cell: &ConditionCell,
    items: &[Item],
    predictor: &PredictorSpec,
    rng: &mut R,
) -> Result<ReplicationResult> {
    let n = cell.sample_size as usize;
    let theta = LatentSample::draw(n, rng);
    let matrix = sample_response_matrix(theta, items, rng)?;
    let observed = matrix.observed_scores();
    let theta = matrix.theta().values();
    let x: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let e: f64 = rng.sample(StandardNormal);
            predictor.coefficient * t + predictor.noise_sd * e
        })
        .collect();

    let rho = spearman(theta, &observed)?;
    let fit = ols_simple(&standardize(&observed)?, &standardize(&x)?)?;
    Ok(ReplicationResult {
        spearman_true_obs: rho,
        slope: fit.slope,
        slope_se: fit.slope_se,
        slope_bias: fit.slope - predictor.reference_slope(),
        discarded_regenerations: 0,
    })
}

/// Replication `rep_index` of `cell`, regenerating degenerate samples.
pub fn run_replication(
    cell: &ConditionCell,
    predictor: &PredictorSpec,
    rep_index: u32,
) -> Result<ReplicationResult> {
    let items = cell.items()?;
    replicate(cell, &items, predictor, rep_index)
}

fn replicate(
    cell: &ConditionCell,
    items: &[Item],
    predictor: &PredictorSpec,
    rep_index: u32,
) -> Result<ReplicationResult> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = replication_rng(cell.cell_seed, rep_index, attempt);
        match simulate_once(cell, items, predictor, &mut rng) {
            Ok(mut result) => {
                result.discarded_regenerations = attempt;
                return Ok(result);
            }
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!(
        "cell K={} sigma={} J={} N={}: replication {rep_index} degenerate after {MAX_ATTEMPTS} attempts",
        cell.num_categories, cell.sigma, cell.num_items, cell.sample_size
    )))
}

fn check_cells(cells: &[ConditionCell]) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("cell list is empty".into()));
    }
    let mut seen = HashSet::new();
    for c in cells {
        if !seen.insert(c.key()) {
            return Err(Error::DuplicateCell(format!(
                "K={} sigma={} items={} n={}",
                c.num_categories, c.sigma, c.num_items, c.sample_size
            )));
        }
    }
    Ok(())
}

/// Summaries plus every replication record, in input cell order.
pub fn run_grid_detailed(
    cells: &[ConditionCell],
    predictor: &PredictorSpec,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<(CellSummary, Vec<ReplicationResult>)>> {
    check_cells(cells)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cell = cell.seeded(master_seed);
                let items = cell.items()?;
                let reps = (0..cell.replications)
                    .into_par_iter()
                    .map(|r| replicate(&cell, &items, predictor, r))
                    .collect::<Result<Vec<_>>>()?;
                Ok((summarize(cell, &reps), reps))
            })
            .collect()
    })
}

/// Run every cell and aggregate its replications.
///
/// `workers = 0` uses all available cores. Output is in input order and is
/// identical for any worker count.
pub fn run_grid(
    cells: &[ConditionCell],
    predictor: &PredictorSpec,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<CellSummary>> {
    Ok(run_grid_detailed(cells, predictor, master_seed, workers)?
        .into_iter()
        .map(|(s, _)| s)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_slope_value() {
        // 0.5 / sqrt(0.29)
        assert_abs_diff_eq!(
            PredictorSpec::default().reference_slope(),
            0.928_476_690_885_259_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn reference_slope_matches_monte_carlo() {
        let spec = PredictorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000_000;
        let (mut sxy, mut sxx, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let t: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let x = 0.5 * t + 0.2 * e;
            sx += t;
            sy += x;
            sxy += t * x;
            sxx += t * t;
            syy += x * x;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx * sy / (nf * nf);
        let r =
            cov / ((sxx / nf - (sx / nf).powi(2)).sqrt() * (syy / nf - (sy / nf).powi(2)).sqrt());
        assert!((r - spec.reference_slope()).abs() < 5e-4, "mc r = {r}");
    }

    #[test]
    fn predictor_spec_validation() {
        assert!(PredictorSpec::new(0.5, 0.0).is_err());
        assert!(PredictorSpec::new(f64::NAN, 0.2).is_err());
        assert!(PredictorSpec::new(0.5, 0.2).is_ok());
    }

    #[test]
    fn cell_validation() {
        assert!(ConditionCell::new(1, 0.5, 1, 100, 10).is_err());
        assert!(ConditionCell::new(5, 0.0, 1, 100, 10).is_err());
        assert!(ConditionCell::new(5, 0.5, 0, 100, 10).is_err());
        assert!(ConditionCell::new(5, 0.5, 1, 9, 10).is_err());
        assert!(ConditionCell::new(5, 0.5, 1, 100, 0).is_err());
    }

    #[test]
    fn replication_is_deterministic() {
        let cell = ConditionCell::new(7, 0.4, 3, 200, 5).unwrap().seeded(9);
        let spec = PredictorSpec::default();
        let a = run_replication(&cell, &spec, 3).unwrap();
        let b = run_replication(&cell, &spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, run_replication(&cell, &spec, 4).unwrap());
    }

    #[test]
    fn near_continuous_errorless_measure_recovers_ranks() {
        let cell = ConditionCell::new(100, 0.01, 1, 1000, 1).unwrap().seeded(1);
        let r = run_replication(&cell, &PredictorSpec::default(), 0).unwrap();
        assert!(r.spearman_true_obs > 0.99, "{}", r.spearman_true_obs);
    }

    #[test]
    fn degenerate_samples_are_regenerated() {
        // K=2 with n=10 hits an all-one-category sample now and then.
        let cell = ConditionCell::new(2, 0.01, 1, 10, 4000).unwrap().seeded(5);
        let out = run_grid_detailed(&[cell], &PredictorSpec::default(), 5, 2).unwrap();
        let (summary, reps) = &out[0];
        assert_eq!(summary.replications_used, 4000);
        assert!(summary.discards > 0);
        assert_eq!(
            summary.discards,
            reps.iter()
                .map(|r| r.discarded_regenerations as u64)
                .sum::<u64>()
        );
    }

    #[test]
    fn duplicate_cells_rejected() {
        let c = ConditionCell::new(5, 0.5, 1, 100, 2).unwrap();
        let err = run_grid(&[c, c], &PredictorSpec::default(), 1, 1).unwrap_err();
        assert!(matches!(err, Error::DuplicateCell(_)));
        assert!(matches!(
            run_grid(&[], &PredictorSpec::default(), 1, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn summary_means_within_replication_range() {
        let cell = ConditionCell::new(4, 0.8, 1, 50, 30).unwrap();
        let out = run_grid_detailed(&[cell], &PredictorSpec::default(), 77, 0).unwrap();
        let (s, reps) = &out[0];
        let within = |m: f64, vals: Vec<f64>| {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m >= lo - 1e-12 && m <= hi + 1e-12
        };
        assert!(within(
            s.spearman.mean,
            reps.iter().map(|r| r.spearman_true_obs).collect()
        ));
        assert!(within(s.slope.mean, reps.iter().map(|r| r.slope).collect()));
        assert!(within(
            s.slope_se.mean,
            reps.iter().map(|r| r.slope_se).collect()
        ));
        assert!(within(
            s.bias.mean,
            reps.iter().map(|r| r.slope_bias).collect()
        ));
        for r in reps {
            assert!((-1.0..=1.0).contains(&r.spearman_true_obs));
            assert!(r.slope_se >= 0.0);
            assert_abs_diff_eq!(
                r.slope_bias,
                r.slope - PredictorSpec::default().reference_slope(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn moments_edge_cases() {
        let m = Moments::of([2.0]);
        assert_eq!(m, Moments { mean: 2.0, sd: 0.0 });
        let m = Moments::of([1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(m.mean, 2.0);
        assert_abs_diff_eq!(m.sd, 1.0);
    }
}
