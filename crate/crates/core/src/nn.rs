//! Finite Kronecker orbits and their nearest-neighbor structure.
//!
//! Everything in this module is the reference implementation: an exact
//! `O(N^2)` scan over the actual points. [`crate::orbit::OrbitTable`] computes
//! the same records much faster and is tested against this module.
//!
//! Nearest neighbors are made unique by taking the largest index among all
//! points at minimal distance.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metric::{DistanceKey, MetricSpec, TorusPoint};
use crate::rational::ExactRational;

/// The points `z_n = {n alpha}` for `n = index_base..=n_max`.
///
/// With `index_base = 1` this is `{z_1, ..., z_N}`; `index_base = 0` adds the
/// origin `z_0`, giving `N + 1` points.
#[derive(Clone, Debug)]
pub struct PointSet {
    alpha: Vec<ExactRational>,
    index_base: u64,
    n: u64,
    points: Vec<TorusPoint>,
    truncation_depth: Option<usize>,
}

pub fn generate(alpha: &[ExactRational], n: u64, index_base: u64) -> Result<PointSet> {
    if index_base > 1 {
        return Err(Error::Precondition(format!("index base must be 0 or 1, got {index_base}")));
    }
    if alpha.is_empty() {
        return Err(Error::Precondition("alpha needs at least one coordinate".into()));
    }
    if n < 1 {
        return Err(Error::Precondition("N must be >= 1".into()));
    }
    let alpha: Vec<ExactRational> = alpha.iter().map(ExactRational::fract).collect();
    let points = (index_base..=n)
        .map(|k| {
            let k = ExactRational::from_integer(k);
            TorusPoint::new(alpha.iter().map(|a| &k * a).collect())
        })
        .collect();
    Ok(PointSet { alpha, index_base, n, points, truncation_depth: None })
}

impl PointSet {
    pub fn with_truncation_depth(mut self, depth: usize) -> Self {
        self.truncation_depth = Some(depth);
        self
    }

    pub fn truncation_depth(&self) -> Option<usize> {
        self.truncation_depth
    }

    pub fn alpha(&self) -> &[ExactRational] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn index_base(&self) -> u64 {
        self.index_base
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn indices(&self) -> RangeInclusive<u64> {
        self.index_base..=self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: u64) -> Result<&TorusPoint> {
        if !self.indices().contains(&i) {
            return Err(Error::IndexOutOfRange { index: i, lo: self.index_base, hi: self.n });
        }
        Ok(&self.points[(i - self.index_base) as usize])
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    fn require_pairs(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Precondition("nearest neighbors need at least two points".into()));
        }
        Ok(())
    }
}

/// Nearest neighbor `j` of point `i` and the counting-metric value `h = |j - i|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NNRecord {
    pub i: u64,
    pub j: u64,
    pub key: DistanceKey,
    pub h: u64,
}

/// Distinct nearest-neighbor keys with multiplicities, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GapSpectrum {
    pub entries: Vec<(DistanceKey, usize)>,
}

impl GapSpectrum {
    pub fn from_keys(keys: impl IntoIterator<Item = DistanceKey>) -> Self {
        let mut keys: Vec<_> = keys.into_iter().collect();
        keys.sort();
        let mut entries: Vec<(DistanceKey, usize)> = Vec::new();
        for k in keys {
            match entries.last_mut() {
                Some((last, count)) if *last == k => *count += 1,
                _ => entries.push((k, 1)),
            }
        }
        GapSpectrum { entries }
    }

    /// Number of distinct nearest-neighbor distances.
    pub fn g(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }
}

/// Serialized as a JSON array of `"p/q"` keys.
impl Serialize for GapSpectrum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.entries.iter().map(|(k, _)| k))
    }
}

/// Coordinates scaled to integers over a common denominator, so distance keys
/// become integers over `scale^q`.
pub(crate) struct ScaledPoints {
    scale: BigUint,
    coords: Vec<Vec<BigUint>>,
}

impl ScaledPoints {
    pub(crate) fn new(points: &[TorusPoint]) -> Self {
        let scale = points
            .iter()
            .flat_map(|p| p.coordinates())
            .fold(BigUint::one(), |acc, c| acc.lcm(&c.denominator().to_biguint().expect("positive denominator")));
        let coords = points
            .iter()
            .map(|p| {
                p.coordinates()
                    .iter()
                    .map(|c| {
                        let (n, d) = c.to_biguint_parts().expect("coordinates are in [0,1)");
                        n * (&scale / d)
                    })
                    .collect()
            })
            .collect();
        ScaledPoints { scale, coords }
    }

    pub(crate) fn key_numerator(&self, a: usize, b: usize, m: MetricSpec) -> BigUint {
        let norms = self.coords[a].iter().zip(&self.coords[b]).map(|(x, y)| {
            let diff = if x >= y { x - y } else { y - x };
            let wrap = &self.scale - &diff;
            diff.min(wrap)
        });
        match m {
            MetricSpec::Finite(q) => norms.fold(BigUint::zero(), |acc, t| acc + t.pow(q)),
            MetricSpec::Infinity => norms.max().unwrap_or_default(),
        }
    }

    pub(crate) fn to_key(&self, numerator: BigUint, m: MetricSpec) -> DistanceKey {
        let denominator = match m {
            MetricSpec::Finite(q) => self.scale.pow(q),
            MetricSpec::Infinity => self.scale.clone(),
        };
        DistanceKey(ExactRational::new(BigInt::from(numerator), BigInt::from(denominator)))
    }
}

fn scan(ps: &PointSet, scaled: &ScaledPoints, pos: usize, m: MetricSpec) -> NNRecord {
    let mut best: Option<(BigUint, usize)> = None;
    for other in 0..ps.points.len() {
        if other == pos {
            continue;
        }
        let k = scaled.key_numerator(pos, other, m);
        // Later indices win ties.
        if best.as_ref().map_or(true, |(b, _)| k <= *b) {
            best = Some((k, other));
        }
    }
    let (num, other) = best.expect("at least two points");
    let (i, j) = (pos as u64 + ps.index_base, other as u64 + ps.index_base);
    NNRecord { i, j, key: scaled.to_key(num, m), h: i.abs_diff(j) }
}

pub fn nearest_neighbor(ps: &PointSet, i: u64, m: MetricSpec) -> Result<NNRecord> {
    ps.require_pairs()?;
    ps.point(i)?;
    let scaled = ScaledPoints::new(&ps.points);
    Ok(scan(ps, &scaled, (i - ps.index_base) as usize, m))
}

/// One record per point, in index order.
pub fn all_records(ps: &PointSet, m: MetricSpec) -> Result<Vec<NNRecord>> {
    ps.require_pairs()?;
    let scaled = ScaledPoints::new(&ps.points);
    Ok((0..ps.points.len()).map(|pos| scan(ps, &scaled, pos, m)).collect())
}

pub fn gap_spectrum(ps: &PointSet, m: MetricSpec) -> Result<GapSpectrum> {
    Ok(GapSpectrum::from_keys(all_records(ps, m)?.into_iter().map(|r| r.key)))
}

/// `h_i(N)` for every point, in index order.
pub fn h_profile(ps: &PointSet, m: MetricSpec) -> Result<Vec<u64>> {
    Ok(all_records(ps, m)?.into_iter().map(|r| r.h).collect())
}

/// Directed edge `i -> nn_1(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: u64,
    pub to: u64,
    pub key: DistanceKey,
}

pub fn nn_graph(ps: &PointSet, m: MetricSpec) -> Result<Vec<Edge>> {
    Ok(all_records(ps, m)?
        .into_iter()
        .map(|r| Edge { from: r.i, to: r.j, key: r.key })
        .collect())
}

/// One `"i j p/q"` line per edge.
pub fn edge_list_text(edges: &[Edge]) -> String {
    let mut out = String::new();
    for e in edges {
        let _ = writeln!(out, "{} {} {}", e.from, e.to, e.key);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf;
    use crate::metric::distance_key;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d)
    }

    #[test]
    fn quarter_rotation() {
        let ps = generate(&[r(1, 4)], 4, 1).unwrap();
        let coords: Vec<String> = ps.points().iter().map(|p| p.coordinates()[0].to_string()).collect();
        assert_eq!(coords, ["1/4", "1/2", "3/4", "0/1"]);
    }

    #[test]
    fn full_period_is_distinct() {
        let ps = generate(&[r(5, 13), r(8, 13)], 13, 1).unwrap();
        let mut pts: Vec<_> = ps.points().to_vec();
        pts.sort_by(|a, b| a.coordinates().cmp(b.coordinates()));
        pts.dedup();
        assert_eq!(pts.len(), 13);
    }

    #[test]
    fn two_points() {
        let alpha = [r(2, 7), r(3, 11)];
        let ps = generate(&alpha, 2, 1).unwrap();
        assert_eq!(ps.len(), 2);
        let recs = all_records(&ps, MetricSpec::L2).unwrap();
        assert_eq!((recs[0].j, recs[0].h), (2, 1));
        assert_eq!((recs[1].j, recs[1].h), (1, 1));
        assert_eq!(gap_spectrum(&ps, MetricSpec::L2).unwrap().g(), 1);
        assert_eq!(h_profile(&ps, MetricSpec::L2).unwrap(), vec![1, 1]);
        let g = nn_graph(&ps, MetricSpec::L2).unwrap();
        assert_eq!((g[0].from, g[0].to, g[1].from, g[1].to), (1, 2, 2, 1));
        assert!(generate(&alpha, 1, 1).map(|p| all_records(&p, MetricSpec::L2)).unwrap().is_err());
    }

    #[test]
    fn ties_go_to_the_largest_index() {
        let ps = generate(&[r(1, 4)], 4, 1).unwrap();
        let rec = nearest_neighbor(&ps, 1, MetricSpec::L2).unwrap();
        assert_eq!((rec.j, rec.h), (4, 3));
        assert_eq!(rec.key.0, r(1, 16));
        let edges: Vec<(u64, u64)> = nn_graph(&ps, MetricSpec::L2).unwrap().iter().map(|e| (e.from, e.to)).collect();
        // 1/4: neighbors 1/2 (2) and 0 (4); 1/2: 1/4 (1), 3/4 (3); 3/4: 1/2 (2), 0 (4); 0: 1/4 (1), 3/4 (3)
        assert_eq!(edges, vec![(1, 4), (2, 3), (3, 4), (4, 3)]);
        assert!(nearest_neighbor(&ps, 5, MetricSpec::L2).is_err());
        assert!(nearest_neighbor(&ps, 0, MetricSpec::L2).is_err());
    }

    #[test]
    fn complement_pair_point_one() {
        let a1 = cf::value_of(&"0;1,(2)".parse().unwrap(), 20).unwrap();
        let a2 = ExactRational::one() - a1.clone();
        let ps = generate(&[a1, a2], 4, 1).unwrap();
        let rec = nearest_neighbor(&ps, 1, MetricSpec::L2).unwrap();
        assert_eq!((rec.j, rec.h), (4, 3));
    }

    #[test]
    fn edge_list_format() {
        let ps = generate(&[r(1, 4)], 2, 1).unwrap();
        let text = edge_list_text(&nn_graph(&ps, MetricSpec::L1).unwrap());
        assert_eq!(text, "1 2 1/4\n2 1 1/4\n");
        let json = serde_json::to_string(&gap_spectrum(&ps, MetricSpec::L1).unwrap()).unwrap();
        assert_eq!(json, r#"["1/4"]"#);
    }

    #[test]
    fn rational_period_spectrum_is_stable() {
        // alpha = 3/7 has period 7; from N = 14 on every point has an exact copy
        let alpha = [r(3, 7), r(2, 7)];
        let at = |n| gap_spectrum(&generate(&alpha, n, 1).unwrap(), MetricSpec::L2).unwrap();
        let reference = at(14);
        assert_eq!(reference.g(), 1);
        assert!(reference.entries[0].0 .0.is_zero());
        for n in 15..30 {
            assert_eq!(at(n).entries.iter().map(|e| &e.0).collect::<Vec<_>>(), vec![&reference.entries[0].0]);
        }
        assert!(at(8).g() > 1);
        assert!(at(7).entries.iter().all(|(k, _)| !k.0.is_zero()));
    }

    proptest! {
        /// The scaled integer keys agree with `distance_key`.
        #[test]
        fn scaled_keys_match_rational_keys(
            nums in prop::collection::vec((1i64..60, 2i64..61), 1..4),
            n in 2u64..12,
            q in prop_oneof![Just(MetricSpec::L1), Just(MetricSpec::L2), Just(MetricSpec::LINF)],
        ) {
            let alpha: Vec<_> = nums.iter().map(|&(a, b)| r(a, b)).collect();
            let ps = generate(&alpha, n, 1).unwrap();
            let scaled = ScaledPoints::new(ps.points());
            for a in 0..ps.len() {
                for b in 0..ps.len() {
                    let k = scaled.to_key(scaled.key_numerator(a, b, q), q);
                    prop_assert_eq!(k, distance_key(&ps.points()[a], &ps.points()[b], q).unwrap());
                }
            }
        }

        /// Scanning candidates in any order gives the same neighbor.
        #[test]
        fn tie_break_is_order_free(den in 2i64..30, num in 1i64..30, n in 2u64..25, seed in any::<u64>()) {
            let alpha = [r(num % den, den)];
            let ps = generate(&alpha, n, 1).unwrap();
            let recs = all_records(&ps, MetricSpec::L2).unwrap();
            let mut order: Vec<u64> = ps.indices().collect();
            // deterministic shuffle
            let mut s = seed;
            for k in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(k, (s >> 33) as usize % (k + 1));
            }
            for rec in &recs {
                let x = ps.point(rec.i).unwrap();
                let mut best: Option<(DistanceKey, u64)> = None;
                for &j in order.iter().filter(|&&j| j != rec.i) {
                    let k = distance_key(x, ps.point(j).unwrap(), MetricSpec::L2).unwrap();
                    let better = match &best {
                        None => true,
                        Some((bk, bj)) => k < *bk || (k == *bk && j > *bj),
                    };
                    if better {
                        best = Some((k, j));
                    }
                }
                prop_assert_eq!(best.unwrap().1, rec.j);
            }
        }

        /// Base 0 with N is base 1 with N + 1 translated by -alpha.
        #[test]
        fn index_base_only_translates(num in 1i64..97, n in 2u64..30) {
            let alpha = [r(num, 97), r(num * 7 % 97, 97)];
            let zero = gap_spectrum(&generate(&alpha, n, 0).unwrap(), MetricSpec::L2).unwrap();
            let one = gap_spectrum(&generate(&alpha, n + 1, 1).unwrap(), MetricSpec::L2).unwrap();
            prop_assert_eq!(zero, one);
        }
    }
}
