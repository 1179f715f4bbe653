//! Adjacent gaps of a one-dimensional rotation orbit.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::ExactRational;

/// Sorted multiset of gap lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapMultiset {
    pub gaps: Vec<ExactRational>,
}

impl GapMultiset {
    pub fn distinct(&self) -> usize {
        let mut d = self.gaps.clone();
        d.dedup();
        d.len()
    }

    pub fn sum(&self) -> ExactRational {
        self.gaps.iter().fold(ExactRational::zero(), |acc, g| acc + g.clone())
    }

    /// Distinct lengths with multiplicities.
    pub fn counts(&self) -> Vec<(ExactRational, usize)> {
        let mut out: Vec<(ExactRational, usize)> = Vec::new();
        for g in &self.gaps {
            match out.last_mut() {
                Some((last, c)) if last == g => *c += 1,
                _ => out.push((g.clone(), 1)),
            }
        }
        out
    }
}

fn split(alpha: &ExactRational) -> (BigUint, BigUint) {
    alpha.fract().to_biguint_parts().expect("fractional part is non-negative")
}

/// Gaps between circularly adjacent points of `{n alpha}`, `n =
/// index_base..=n`. Coincident points contribute zero-length gaps.
pub fn circle_gaps(alpha: &[ExactRational], n: u64, index_base: u64) -> Result<GapMultiset> {
    if alpha.len() != 1 {
        return Err(Error::DimensionMismatch { left: alpha.len(), right: 1 });
    }
    if index_base > 1 || n < index_base {
        return Err(Error::Precondition(format!("need index base 0 or 1 and N >= base, got {index_base}, {n}")));
    }
    let (p, q) = split(&alpha[0]);
    let mut pos: Vec<BigUint> = (index_base..=n).map(|k| (&p * BigUint::from(k)) % &q).collect();
    pos.sort();
    let mut gaps: Vec<BigUint> = pos.windows(2).map(|w| &w[1] - &w[0]).collect();
    gaps.push(&q - pos.last().unwrap() + &pos[0]);
    gaps.sort();
    let qi = BigInt::from(q);
    Ok(GapMultiset { gaps: gaps.into_iter().map(|g| ExactRational::new(BigInt::from(g), qi.clone())).collect() })
}

/// Adds orbit points one at a time and keeps the gap multiset up to date.
pub struct GapTracker {
    step: BigUint,
    modulus: BigUint,
    current: BigUint,
    next_index: u64,
    points: BTreeMap<BigUint, usize>,
    gaps: BTreeMap<BigUint, usize>,
    total: BigUint,
}

impl GapTracker {
    /// Starts before `z_{index_base}`.
    pub fn new(alpha: &ExactRational, index_base: u64) -> Self {
        let (step, modulus) = split(alpha);
        let current = (&step * BigUint::from(index_base)) % &modulus;
        GapTracker {
            step,
            modulus,
            current,
            next_index: index_base,
            points: BTreeMap::new(),
            gaps: BTreeMap::new(),
            total: BigUint::zero(),
        }
    }

    fn add_gap(&mut self, g: BigUint) {
        self.total += &g;
        *self.gaps.entry(g).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: &BigUint) {
        self.total -= g;
        let c = self.gaps.get_mut(g).expect("gap present");
        *c -= 1;
        if *c == 0 {
            self.gaps.remove(g);
        }
    }

    /// Inserts the next orbit point and returns its index.
    pub fn push(&mut self) -> u64 {
        let x = self.current.clone();
        self.current += &self.step;
        if self.current >= self.modulus {
            self.current -= &self.modulus;
        }
        let index = self.next_index;
        self.next_index += 1;

        if let Some(c) = self.points.get_mut(&x) {
            *c += 1;
            self.add_gap(BigUint::zero());
            return index;
        }
        if self.points.is_empty() {
            self.points.insert(x, 1);
            let full = self.modulus.clone();
            self.add_gap(full);
            return index;
        }
        let pred = self.points.range(..&x).next_back().or_else(|| self.points.iter().next_back()).map(|(k, _)| k.clone()).unwrap();
        let succ = self.points.range(&x..).next().or_else(|| self.points.iter().next()).map(|(k, _)| k.clone()).unwrap();
        let arc = |a: &BigUint, b: &BigUint| if b > a { b - a } else { &self.modulus - a + b };
        let old = arc(&pred, &succ);
        let left = arc(&pred, &x);
        let right = arc(&x, &succ);
        self.remove_gap(&old);
        self.add_gap(left);
        self.add_gap(right);
        self.points.insert(x, 1);
        index
    }

    pub fn distinct(&self) -> usize {
        self.gaps.len()
    }

    /// Whether the gaps add up to the full circle.
    pub fn sums_to_one(&self) -> bool {
        self.total == self.modulus
    }

    pub fn snapshot(&self) -> GapMultiset {
        let q = BigInt::from(self.modulus.clone());
        let mut gaps = Vec::new();
        for (g, &c) in &self.gaps {
            for _ in 0..c {
                gaps.push(ExactRational::new(BigInt::from(g.clone()), q.clone()));
            }
        }
        GapMultiset { gaps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d)
    }

    #[test]
    fn golden_angle_figure() {
        let z = cf::value_of(&"0;2,(1)".parse().unwrap(), 40).unwrap();
        let g = circle_gaps(&[z], 6, 0).unwrap();
        assert_eq!(g.gaps.len(), 7);
        assert_eq!(g.distinct(), 3);
        assert_eq!(g.sum(), ExactRational::one());
        let mult: Vec<usize> = g.counts().iter().map(|c| c.1).collect();
        // Figure: four dotted arcs, two solid, one dashed
        assert_eq!(mult, vec![2, 4, 1]);
    }

    #[test]
    fn quarter_closes_up() {
        let g = circle_gaps(&[r(1, 4)], 4, 1).unwrap();
        assert_eq!(g.counts(), vec![(r(1, 4), 4)]);
    }

    #[test]
    fn inverse_golden_small() {
        let a = cf::value_of(&"0;(1)".parse().unwrap(), 30).unwrap();
        let g = circle_gaps(&[a], 4, 1).unwrap();
        assert!(g.distinct() <= 3);
        assert_eq!(g.sum(), ExactRational::one());
        assert!(circle_gaps(&[r(1, 3), r(1, 5)], 4, 1).is_err());
    }

    proptest! {
        #[test]
        fn tracker_matches_direct(num in 1i64..500, den in 2i64..500, n in 1u64..60, base in 0u64..2) {
            let a = r(num % den, den);
            let mut t = GapTracker::new(&a, base);
            for _ in base..=n {
                t.push();
            }
            prop_assert_eq!(t.snapshot(), circle_gaps(&[a], n, base).unwrap());
            prop_assert!(t.sums_to_one());
        }

        #[test]
        fn at_most_three_gaps(num in 1i64..5000, den in 2i64..5000, n in 1u64..80) {
            let g = circle_gaps(&[r(num % den, den)], n, 1).unwrap();
            prop_assert!(g.distinct() <= 3);
            prop_assert_eq!(g.sum(), ExactRational::one());
        }
    }
}
