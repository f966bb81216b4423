//! Item-variable construction of the normal-ogive graded response model.
//!
//! A respondent with true score `theta` produces a continuous item variable
//! `gamma ~ Normal(theta, sigma)` which is cut into ordered categories by the
//! item's thresholds. Integrating the item-variable density over a bin gives
//! the category probability, and over the upper tail the item characteristic
//! curve, both of which reduce to differences of the standard normal CDF.

use libm::erfc;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        1.0
    } else if z == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }
}

/// Standard normal upper tail, `1 - Phi(z)`, without cancellation for large `z`.
pub fn std_normal_sf(z: f64) -> f64 {
    if z == f64::INFINITY {
        0.0
    } else if z == f64::NEG_INFINITY {
        1.0
    } else {
        0.5 * erfc(z / std::f64::consts::SQRT_2)
    }
}

/// Ordered category cutpoints on the latent-trait scale.
///
/// `K - 1` strictly increasing finite values partition the real line into
/// `K` response categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds(Vec<f64>);

impl Thresholds {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "thresholds need at least one cutpoint".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("thresholds must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "thresholds must be strictly increasing".into(),
            ));
        }
        Ok(Thresholds(values))
    }

    /// Evenly spaced cutpoints for `num_categories` categories.
    ///
    /// Two categories split at 0. Otherwise the cutpoints are the interior
    /// points of `num_categories + 1` equally spaced values from -2 to 2.
    pub fn evenly_spaced(num_categories: u32) -> Result<Self> {
        if num_categories < 2 {
            return Err(Error::InvalidArgument(format!(
                "number of categories must be at least 2, got {num_categories}"
            )));
        }
        if num_categories == 2 {
            return Ok(Thresholds(vec![0.0]));
        }
        let k = num_categories as f64;
        // Integer numerator keeps the sequence exactly antisymmetric about 0.
        let values = (1..num_categories)
            .map(|i| (2.0 * i as f64 - k) * 2.0 / k)
            .collect();
        Ok(Thresholds(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn num_categories(&self) -> u32 {
        self.0.len() as u32 + 1
    }

    /// Lower and upper bound of category `k` (1-based), with infinite outer edges.
    fn bin(&self, k: u32) -> (f64, f64) {
        let k = k as usize;
        let lower = if k == 1 {
            f64::NEG_INFINITY
        } else {
            self.0[k - 2]
        };
        let upper = if k == self.0.len() + 1 {
            f64::INFINITY
        } else {
            self.0[k - 1]
        };
        (lower, upper)
    }
}

/// Cutpoints for `num_categories` response categories.
pub fn make_thresholds(num_categories: u32) -> Result<Thresholds> {
    Thresholds::evenly_spaced(num_categories)
}

/// Category index in `1..=K` for an item-variable value.
///
/// Bins are half-open, `(beta_{k-1}, beta_k]`, so a value sitting exactly on a
/// cutpoint falls into the lower category.
pub fn categorize(gamma: f64, thresholds: &Thresholds) -> u32 {
    thresholds.0.partition_point(|&b| b < gamma) as u32 + 1
}

/// A single item: measurement error sd plus its thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    sigma: f64,
    thresholds: Thresholds,
}

impl Item {
    pub fn new(sigma: f64, thresholds: Thresholds) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "item sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Item { sigma, thresholds })
    }

    /// Item with evenly spaced thresholds for `num_categories` categories.
    pub fn with_categories(sigma: f64, num_categories: u32) -> Result<Self> {
        Item::new(sigma, make_thresholds(num_categories)?)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn num_categories(&self) -> u32 {
        self.thresholds.num_categories()
    }
}

/// P(y = k | theta): mass of the item-variable density inside bin `k`.
pub fn category_prob(theta: f64, k: u32, item: &Item) -> Result<f64> {
    let num_categories = item.num_categories();
    if k < 1 || k > num_categories {
        return Err(Error::InvalidArgument(format!(
            "category {k} outside 1..={num_categories}"
        )));
    }
    let (lower, upper) = item.thresholds.bin(k);
    let z_lo = (lower - theta) / item.sigma;
    let z_hi = (upper - theta) / item.sigma;
    let p = if z_lo > 0.0 {
        std_normal_sf(z_lo) - std_normal_sf(z_hi)
    } else {
        std_normal_cdf(z_hi) - std_normal_cdf(z_lo)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// P(y > k | theta), the item characteristic curve for boundary `k`.
///
/// `k = 0` is identically 1 and `k = K` identically 0.
pub fn icc_above(theta: f64, k: u32, item: &Item) -> Result<f64> {
    let num_categories = item.num_categories();
    if k > num_categories {
        return Err(Error::InvalidArgument(format!(
            "boundary {k} outside 0..={num_categories}"
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k == num_categories {
        return Ok(0.0);
    }
    let beta = item.thresholds.0[k as usize - 1];
    Ok(std_normal_sf((beta - theta) / item.sigma))
}

/// True scores for `n` respondents.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample(Vec<f64>);

impl LatentSample {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "latent scores must be finite".into(),
            ));
        }
        Ok(LatentSample(theta))
    }

    /// `n` independent standard normal draws.
    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        LatentSample((0..n).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// N x J ordinal responses together with the scores that generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    responses: Vec<u32>,
    num_items: usize,
    num_categories: u32,
    theta: LatentSample,
    predictor: Option<Vec<f64>>,
}

impl ResponseMatrix {
    pub fn num_rows(&self) -> usize {
        self.theta.len()
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_categories(&self) -> u32 {
        self.num_categories
    }

    pub fn theta(&self) -> &LatentSample {
        &self.theta
    }

    pub fn predictor(&self) -> Option<&[f64]> {
        self.predictor.as_deref()
    }

    /// Row-major response data.
    pub fn responses(&self) -> &[u32] {
        &self.responses
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.responses[i * self.num_items..(i + 1) * self.num_items]
    }

    /// Attach the external predictor; its length must match the row count.
    pub fn set_predictor(&mut self, predictor: Vec<f64>) -> Result<()> {
        if predictor.len() != self.num_rows() {
            return Err(Error::InvalidArgument(format!(
                "predictor has {} entries for {} rows",
                predictor.len(),
                self.num_rows()
            )));
        }
        self.predictor = Some(predictor);
        Ok(())
    }

    /// Unweighted row means of the raw category indices.
    pub fn observed_scores(&self) -> Vec<f64> {
        if self.num_items == 1 {
            return self.responses.iter().map(|&r| r as f64).collect();
        }
        let j = self.num_items as f64;
        self.responses
            .chunks_exact(self.num_items)
            .map(|row| row.iter().map(|&r| r as f64).sum::<f64>() / j)
            .collect()
    }
}

/// Draw one response per respondent and item.
///
/// For each row `i` and item `j` (in that order) the item variable
/// `theta_i + sigma_j * z` is drawn and categorized. All items must share the
/// same number of categories. The predictor is left unset.
pub fn sample_response_matrix<R: Rng + ?Sized>(
    theta: LatentSample,
    items: &[Item],
    rng: &mut R,
) -> Result<ResponseMatrix> {
    let first = items
        .first()
        .ok_or_else(|| Error::InvalidArgument("item list is empty".into()))?;
    let num_categories = first.num_categories();
    if items.iter().any(|it| it.num_categories() != num_categories) {
        return Err(Error::InvalidArgument(
            "all items in a scale must have the same number of categories".into(),
        ));
    }

    let mut responses = Vec::with_capacity(theta.len() * items.len());
    for &t in theta.values() {
        for item in items {
            let z: f64 = rng.sample(StandardNormal);
            responses.push(categorize(t + item.sigma * z, &item.thresholds));
        }
    }
    Ok(ResponseMatrix {
        responses,
        num_items: items.len(),
        num_categories,
        theta,
        predictor: None,
    })
}
