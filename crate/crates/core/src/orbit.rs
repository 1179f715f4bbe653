//! Fast exact nearest-neighbor records for Kronecker orbits.
//!
//! On the torus `z_i - z_j = (i - j) alpha`, so the distance between two
//! orbit points depends only on the offset `|i - j|`. A point `i` of
//! `{z_lo, ..., z_hi}` sees the offsets `1..=max(i - lo, hi - i)`, hence its
//! nearest-neighbor key is a prefix minimum of the offset keys. One table of
//! `max_offset` keys answers every `N <= max_offset + lo` in `O(N)` or better.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::metric::{DistanceKey, MetricSpec};
use crate::nn::{GapSpectrum, NNRecord};
use crate::rational::ExactRational;

/// How the running minimum of offset keys changes at an offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinEvent {
    NewMin,
    Tie,
}

#[derive(Clone, Debug)]
pub struct OrbitTable {
    metric: MetricSpec,
    max_offset: usize,
    key_denominator: BigUint,
    /// Index `m` holds the key numerator of offset `m`; index 0 is unused.
    keys: Vec<BigUint>,
    /// Dense rank of each offset's key.
    class: Vec<u32>,
    /// Sorted offsets per class.
    occurrences: Vec<Vec<u32>>,
    /// Class of the minimal key over offsets `1..=M`.
    prefix_class: Vec<u32>,
    /// Number of distinct prefix minima over `1..=M`.
    record_count: Vec<u32>,
}

impl OrbitTable {
    pub fn new(alpha: &[ExactRational], max_offset: usize, metric: MetricSpec) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Precondition("alpha needs at least one coordinate".into()));
        }
        if max_offset == 0 {
            return Err(Error::Precondition("max_offset must be >= 1".into()));
        }
        let parts: Vec<(BigUint, BigUint)> = alpha
            .iter()
            .map(|a| a.fract().to_biguint_parts().expect("fractional part is non-negative"))
            .collect();
        let scale = parts.iter().fold(BigUint::one(), |acc, (_, q)| acc.lcm(q));
        let factors: Vec<BigUint> = parts.iter().map(|(_, q)| &scale / q).collect();

        let mut residues = vec![BigUint::zero(); parts.len()];
        let mut keys = Vec::with_capacity(max_offset + 1);
        keys.push(BigUint::zero());
        for _ in 1..=max_offset {
            let norms = residues.iter_mut().zip(&parts).zip(&factors).map(|((r, (p, q)), f)| {
                *r += p;
                if &*r >= q {
                    *r -= q;
                }
                let t = if &(&*r << 1) > q { q - &*r } else { r.clone() };
                t * f
            });
            let key = match metric {
                MetricSpec::Finite(e) => norms.fold(BigUint::zero(), |acc, t| acc + t.pow(e)),
                MetricSpec::Infinity => norms.max().unwrap_or_default(),
            };
            keys.push(key);
        }
        let key_denominator = match metric {
            MetricSpec::Finite(e) => scale.pow(e),
            MetricSpec::Infinity => scale,
        };

        let mut order: Vec<u32> = (1..=max_offset as u32).collect();
        order.sort_by(|&a, &b| keys[a as usize].cmp(&keys[b as usize]).then(a.cmp(&b)));
        let mut class = vec![0u32; max_offset + 1];
        let mut occurrences: Vec<Vec<u32>> = Vec::new();
        for (pos, &m) in order.iter().enumerate() {
            if pos == 0 || keys[m as usize] != keys[order[pos - 1] as usize] {
                occurrences.push(Vec::new());
            }
            let c = occurrences.len() - 1;
            class[m as usize] = c as u32;
            occurrences[c].push(m);
        }

        let mut prefix_class = vec![0u32; max_offset + 1];
        let mut record_count = vec![0u32; max_offset + 1];
        let mut current = u32::MAX;
        let mut count = 0;
        for m in 1..=max_offset {
            if class[m] < current {
                current = class[m];
                count += 1;
            }
            prefix_class[m] = current;
            record_count[m] = count;
        }

        Ok(OrbitTable { metric, max_offset, key_denominator, keys, class, occurrences, prefix_class, record_count })
    }

    pub fn metric(&self) -> MetricSpec {
        self.metric
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    /// Key of the distance between `z_i` and `z_{i+m}`.
    pub fn key(&self, offset: usize) -> DistanceKey {
        DistanceKey(ExactRational::new(
            BigInt::from(self.keys[offset].clone()),
            BigInt::from(self.key_denominator.clone()),
        ))
    }

    /// Offsets at which the running minimum drops or is matched again.
    pub fn signature(&self) -> Vec<(u32, MinEvent)> {
        let mut out = Vec::new();
        for m in 1..=self.max_offset {
            let prev = if m == 1 { u32::MAX } else { self.prefix_class[m - 1] };
            if self.class[m] < prev {
                out.push((m as u32, MinEvent::NewMin));
            } else if self.class[m] == prev {
                out.push((m as u32, MinEvent::Tie));
            }
        }
        out
    }

    fn bounds(&self, n: u64, index_base: u64) -> Result<(u64, u64)> {
        if index_base > 1 {
            return Err(Error::Precondition(format!("index base must be 0 or 1, got {index_base}")));
        }
        if n < index_base + 1 {
            return Err(Error::Precondition("nearest neighbors need at least two points".into()));
        }
        if n - index_base > self.max_offset as u64 {
            return Err(Error::Precondition(format!(
                "table covers offsets up to {}, N = {n} with base {index_base} needs {}",
                self.max_offset,
                n - index_base
            )));
        }
        Ok((index_base, n))
    }

    fn record_in(&self, lo: u64, hi: u64, i: u64) -> NNRecord {
        let back = i - lo;
        let fwd = hi - i;
        let reach = back.max(fwd) as usize;
        let class = self.prefix_class[reach];
        let occ = &self.occurrences[class as usize];
        // largest minimizing offset reachable forwards wins; otherwise the
        // smallest backwards offset gives the largest index
        let upto = occ.partition_point(|&m| m as u64 <= fwd);
        let (j, offset) = if upto > 0 {
            let m = occ[upto - 1] as u64;
            (i + m, m)
        } else {
            let m = occ[0] as u64;
            (i - m, m)
        };
        NNRecord { i, j, key: self.key(offset as usize), h: offset }
    }

    pub fn record(&self, n: u64, index_base: u64, i: u64) -> Result<NNRecord> {
        let (lo, hi) = self.bounds(n, index_base)?;
        if i < lo || i > hi {
            return Err(Error::IndexOutOfRange { index: i, lo, hi });
        }
        Ok(self.record_in(lo, hi, i))
    }

    pub fn records(&self, n: u64, index_base: u64) -> Result<Vec<NNRecord>> {
        let (lo, hi) = self.bounds(n, index_base)?;
        Ok((lo..=hi).map(|i| self.record_in(lo, hi, i)).collect())
    }

    /// `h_i(N)`.
    pub fn h(&self, i: u64, n: u64, index_base: u64) -> Result<u64> {
        Ok(self.record(n, index_base, i)?.h)
    }

    /// `h_1(N)` on `{z_1, ..., z_N}`.
    pub fn h1(&self, n: u64) -> Result<u64> {
        self.h(1, n, 1)
    }

    /// Number of distinct nearest-neighbor distances, in `O(1)`.
    pub fn g(&self, n: u64, index_base: u64) -> Result<usize> {
        let (lo, hi) = self.bounds(n, index_base)?;
        let span = hi - lo;
        let min_reach = span.div_ceil(2) as usize;
        let max_reach = span as usize;
        Ok((self.record_count[max_reach] - self.record_count[min_reach]) as usize + 1)
    }

    pub fn spectrum(&self, n: u64, index_base: u64) -> Result<GapSpectrum> {
        let (lo, hi) = self.bounds(n, index_base)?;
        let mut counts: Vec<(u32, usize)> = Vec::new();
        for i in lo..=hi {
            let reach = (i - lo).max(hi - i) as usize;
            let c = self.prefix_class[reach];
            match counts.iter_mut().find(|(k, _)| *k == c) {
                Some(e) => e.1 += 1,
                None => counts.push((c, 1)),
            }
        }
        counts.sort();
        Ok(GapSpectrum {
            entries: counts
                .into_iter()
                .map(|(c, k)| (self.key(self.occurrences[c as usize][0] as usize), k))
                .collect(),
        })
    }
}
