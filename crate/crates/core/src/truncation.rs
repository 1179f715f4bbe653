//! Realizing (possibly infinite) coefficient streams as exact rationals, and
//! checking that a truncation is deep enough not to change any result.

use num_bigint::BigUint;
use serde::Serialize;

use crate::cf::{self, CoefficientStream};
use crate::construction::ConstructedTuple;
use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::orbit::OrbitTable;
use crate::rational::ExactRational;

/// Maximum number of `+2` escalations tried by [`stable_depths`].
pub const MAX_ESCALATIONS: usize = 8;

/// The coordinates of an `alpha` vector as streams; a coordinate may instead
/// be `1 - alpha_j`, which is then realized exactly from coordinate `j`.
#[derive(Clone, Debug)]
pub struct AlphaSpec {
    pub streams: Vec<CoefficientStream>,
    pub complement_of: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthPolicy {
    /// Smallest depth with `q_K > N_max^2`.
    Auto,
    Fixed(usize),
}

impl AlphaSpec {
    pub fn new(streams: Vec<CoefficientStream>) -> Self {
        let complement_of = vec![None; streams.len()];
        AlphaSpec { streams, complement_of }
    }

    pub fn from_tuple(tuple: &ConstructedTuple) -> Self {
        AlphaSpec { streams: tuple.streams.clone(), complement_of: tuple.complement_of.clone() }
    }

    pub fn dim(&self) -> usize {
        self.streams.len()
    }

    fn cap(&self, c: usize, depth: usize) -> usize {
        self.streams[c].len().map_or(depth, |n| depth.min(n))
    }

    pub fn auto_depths(&self, n_max: u64) -> Vec<usize> {
        let bound = BigUint::from(n_max) * BigUint::from(n_max);
        self.streams.iter().map(|s| cf::depth_exceeding(s, &bound)).collect()
    }

    pub fn fixed_depths(&self, depth: usize) -> Vec<usize> {
        (0..self.dim()).map(|c| self.cap(c, depth)).collect()
    }

    pub fn depths(&self, n_max: u64, policy: DepthPolicy) -> Vec<usize> {
        match policy {
            DepthPolicy::Auto => self.auto_depths(n_max),
            DepthPolicy::Fixed(k) => self.fixed_depths(k),
        }
    }

    pub fn deepen(&self, depths: &[usize], by: usize) -> Vec<usize> {
        depths.iter().enumerate().map(|(c, &d)| self.cap(c, d + by)).collect()
    }

    /// Exact `alpha` at the given per-coordinate depths. Entries for
    /// complement coordinates are ignored.
    pub fn realize(&self, depths: &[usize]) -> Result<Vec<ExactRational>> {
        if depths.len() != self.dim() {
            return Err(Error::DimensionMismatch { left: depths.len(), right: self.dim() });
        }
        let direct: Vec<Option<ExactRational>> = self
            .streams
            .iter()
            .zip(&self.complement_of)
            .zip(depths)
            .map(|((s, comp), &d)| match comp {
                Some(_) => Ok(None),
                None => cf::value_of(s, self.cap_stream(s, d)).map(Some),
            })
            .collect::<Result<_>>()?;
        self.complement_of
            .iter()
            .enumerate()
            .map(|(c, comp)| match comp {
                None => Ok(direct[c].clone().expect("direct coordinate")),
                Some(j) => direct
                    .get(*j)
                    .cloned()
                    .flatten()
                    .map(|v| ExactRational::one() - v)
                    .ok_or_else(|| Error::Precondition(format!("coordinate {c} complements a missing coordinate {j}"))),
            })
            .collect()
    }

    fn cap_stream(&self, s: &CoefficientStream, depth: usize) -> usize {
        s.len().map_or(depth, |n| depth.min(n))
    }
}

/// Whether every nearest-neighbor record and every `g_N`, `N <= n_max`, is the
/// same at `depths` and at `depths + 2`, for every metric.
pub fn stability_check(spec: &AlphaSpec, n_max: u64, depths: &[usize], metrics: &[MetricSpec]) -> Result<bool> {
    let shallow = spec.realize(depths)?;
    let deep = spec.realize(&spec.deepen(depths, 2))?;
    if shallow == deep {
        return Ok(true);
    }
    let max_offset = n_max.max(2) as usize;
    for &m in metrics {
        let a = OrbitTable::new(&shallow, max_offset, m)?;
        let b = OrbitTable::new(&deep, max_offset, m)?;
        if a.signature() != b.signature() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Depths that pass [`stability_check`], escalating by 2 from the policy's
/// starting point. A fixed policy is not escalated.
pub fn stable_depths(spec: &AlphaSpec, n_max: u64, policy: DepthPolicy, metrics: &[MetricSpec]) -> Result<Vec<usize>> {
    let mut depths = spec.depths(n_max, policy);
    let tries = if matches!(policy, DepthPolicy::Fixed(_)) { 1 } else { MAX_ESCALATIONS };
    for attempt in 0..tries {
        if attempt > 0 {
            depths = spec.deepen(&depths, 2);
        }
        if stability_check(spec, n_max, &depths, metrics)? {
            return Ok(depths);
        }
    }
    let suggested = spec.auto_depths(n_max).into_iter().max().unwrap_or(0).max(depths.iter().copied().max().unwrap_or(0) + 2);
    Err(Error::Unstable { n_max: n_max as usize, depth: depths.iter().copied().max().unwrap_or(0), suggested })
}
