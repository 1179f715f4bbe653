//! Exact `L_q` distances on the flat torus `R^d / Z^d`.
//!
//! Distances are never materialized. For finite `q` a [`DistanceKey`] holds
//! `sum_i ||x_i - y_i||^q`, for `q = inf` it holds `max_i ||x_i - y_i||`; both
//! are monotone images of the true distance, so comparing keys compares
//! distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::ExactRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricSpec {
    Finite(u32),
    Infinity,
}

impl MetricSpec {
    pub const L1: MetricSpec = MetricSpec::Finite(1);
    pub const L2: MetricSpec = MetricSpec::Finite(2);
    pub const LINF: MetricSpec = MetricSpec::Infinity;

    pub fn finite(q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Precondition("metric exponent must be >= 1".into()));
        }
        Ok(MetricSpec::Finite(q))
    }

    /// Column label used in sweep tables: `L1`, `L2`, `Linf`.
    pub fn label(&self) -> String {
        match self {
            MetricSpec::Finite(q) => format!("L{q}"),
            MetricSpec::Infinity => "Linf".into(),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Finite(q) => write!(f, "{q}"),
            MetricSpec::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" | "∞" => Ok(MetricSpec::Infinity),
            t => {
                let q = t.parse::<u32>().map_err(|_| Error::Parse {
                    position: 0,
                    message: format!("metric must be a positive integer or 'inf', got {s:?}"),
                })?;
                MetricSpec::finite(q)
            }
        }
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of the torus with every coordinate reduced into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TorusPoint(Vec<ExactRational>);

impl TorusPoint {
    pub fn new(coordinates: Vec<ExactRational>) -> Self {
        TorusPoint(coordinates.iter().map(ExactRational::fract).collect())
    }

    pub fn coordinates(&self) -> &[ExactRational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn translate(&self, t: &[ExactRational]) -> Self {
        TorusPoint::new(self.0.iter().zip(t).map(|(x, s)| x + s).collect())
    }
}

/// Exact surrogate for `d_q`; equal keys mean equal distances.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceKey(pub ExactRational);

impl fmt::Display for DistanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Distance to the nearest integer, in `[0, 1/2]`.
pub fn coord_norm(x: &ExactRational) -> ExactRational {
    let r = x.fract();
    let other = ExactRational::one() - r.clone();
    if other < r {
        other
    } else {
        r
    }
}

/// Builds a key from per-coordinate torus norms.
pub fn key_from_norms<'a>(norms: impl IntoIterator<Item = &'a ExactRational>, m: MetricSpec) -> DistanceKey {
    match m {
        MetricSpec::Finite(q) => {
            DistanceKey(norms.into_iter().fold(ExactRational::zero(), |acc, t| acc + t.pow(q)))
        }
        MetricSpec::Infinity => {
            DistanceKey(norms.into_iter().cloned().max().unwrap_or_else(ExactRational::zero))
        }
    }
}

pub fn distance_key(x: &TorusPoint, y: &TorusPoint, m: MetricSpec) -> Result<DistanceKey> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let norms: Vec<_> = x.0.iter().zip(&y.0).map(|(a, b)| coord_norm(&(a - b))).collect();
    Ok(key_from_norms(&norms, m))
}
