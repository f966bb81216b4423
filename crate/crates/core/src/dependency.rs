//! Rules tying measurement error to the number of response categories.
//!
//! The named small/medium/large profiles are relative to a unit-variance
//! latent trait and are conveniences for reproducing the reference design,
//! not general-purpose categorizations of error dependency.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Named linear profiles over K = 2..=20.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileName {
    Small,
    Medium,
    Large,
}

impl ProfileName {
    pub const ALL: [ProfileName; 3] = [ProfileName::Small, ProfileName::Medium, ProfileName::Large];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::Small => "small",
            ProfileName::Medium => "medium",
            ProfileName::Large => "large",
        }
    }

    fn sigma_span(self) -> (f64, f64) {
        match self {
            ProfileName::Small => (0.05, 0.5),
            ProfileName::Medium => (0.1, 1.0),
            ProfileName::Large => (0.2, 2.0),
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(ProfileName::Small),
            "medium" => Ok(ProfileName::Medium),
            "large" => Ok(ProfileName::Large),
            other => Err(Error::InvalidArgument(format!(
                "unknown dependency profile `{other}` (expected small, medium or large)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DependencyProfile {
    /// The same sigma for every category count.
    Independent { sigma: f64 },
    /// Sigma grows linearly from `sigma_start` at `k_min` to `sigma_end` at `k_max`.
    Linear {
        k_min: u32,
        k_max: u32,
        sigma_start: f64,
        sigma_end: f64,
    },
}

impl DependencyProfile {
    pub fn independent(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "independent sigma must be positive, got {sigma}"
            )));
        }
        Ok(DependencyProfile::Independent { sigma })
    }

    /// Only increasing linear maps are accepted.
    pub fn linear(k_min: u32, k_max: u32, sigma_start: f64, sigma_end: f64) -> Result<Self> {
        if k_min < 2 {
            return Err(Error::InvalidArgument(format!(
                "linear profile k_min must be at least 2, got {k_min}"
            )));
        }
        if k_max <= k_min {
            return Err(Error::InvalidArgument(format!(
                "linear profile needs k_max > k_min, got {k_min}..={k_max}"
            )));
        }
        if !(sigma_start.is_finite() && sigma_start > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "linear profile sigma_start must be positive, got {sigma_start}"
            )));
        }
        if !(sigma_end.is_finite() && sigma_end > sigma_start) {
            return Err(Error::InvalidArgument(format!(
                "linear profile must be increasing: sigma_end {sigma_end} <= sigma_start {sigma_start}"
            )));
        }
        Ok(DependencyProfile::Linear {
            k_min,
            k_max,
            sigma_start,
            sigma_end,
        })
    }

    /// Category counts the profile is defined on; `None` when unrestricted.
    pub fn k_range(&self) -> Option<RangeInclusive<u32>> {
        match *self {
            DependencyProfile::Independent { .. } => None,
            DependencyProfile::Linear { k_min, k_max, .. } => Some(k_min..=k_max),
        }
    }

    pub fn sigma_for(&self, num_categories: u32) -> Result<f64> {
        match *self {
            DependencyProfile::Independent { sigma } => {
                if num_categories < 2 {
                    return Err(Error::OutOfDomain(format!(
                        "K = {num_categories} is below 2"
                    )));
                }
                Ok(sigma)
            }
            DependencyProfile::Linear {
                k_min,
                k_max,
                sigma_start,
                sigma_end,
            } => {
                if !(k_min..=k_max).contains(&num_categories) {
                    return Err(Error::OutOfDomain(format!(
                        "K = {num_categories} outside profile domain {k_min}..={k_max}"
                    )));
                }
                // Weighted form is exact at both endpoints.
                let span = (k_max - k_min) as f64;
                let above = (num_categories - k_min) as f64;
                let below = (k_max - num_categories) as f64;
                Ok((sigma_start * below + sigma_end * above) / span)
            }
        }
    }
}

/// One of the three reference linear profiles.
pub fn named_profile(name: &str) -> Result<DependencyProfile> {
    Ok(profile_for(name.parse()?))
}

pub fn profile_for(name: ProfileName) -> DependencyProfile {
    let (sigma_start, sigma_end) = name.sigma_span();
    DependencyProfile::Linear {
        k_min: 2,
        k_max: 20,
        sigma_start,
        sigma_end,
    }
}

pub fn sigma_for(profile: &DependencyProfile, num_categories: u32) -> Result<f64> {
    profile.sigma_for(num_categories)
}
