//! Vectors `(alpha_1, ..., alpha_d)` whose convergent denominators coincide
//! along a subsequence.
//!
//! * [`simple_pair`] pairs `alpha` with `1 - alpha`; every denominator of the
//!   complement is a denominator of `alpha` shifted by one index.
//! * [`general_construct`] picks `alpha_1` coefficients at scheduled positions
//!   `k_l` by solving a linear congruence, so that `q_{k_l}(alpha_1) =
//!   q_l(alpha_2)` for every `l`.
//! * [`construct_3d`] adds `alpha_3 = 1 - alpha_1` to a general pair.
//! * [`extended_construct`] replaces the congruence target `q_{l-1}` by
//!   `b_l q_{l-1}`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{self, CoefficientStream};
use crate::error::{Error, Result};

/// Where the coefficients of `alpha_1` are forced and where they are free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionSchedule {
    /// Strictly increasing positions `k_1 < k_2 < ...` with `k_1 >= 2` and
    /// gaps of at least 2.
    pub k: Vec<usize>,
    /// Coefficients for positions that are not solved for. Overrides the
    /// caller's `alpha_1` stream at the same position.
    #[serde(default)]
    pub free: BTreeMap<usize, u64>,
    #[serde(default = "default_min_coefficient")]
    pub min_coefficient: u64,
    /// Per step multipliers `b_l`, one for each `l = 1..L-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<u64>>,
    /// Replace a coefficient that fails [`coprimality_condition`] by the
    /// [`suggest_coefficient`] choice instead of failing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub auto_adjust: bool,
}

fn default_min_coefficient() -> u64 {
    2
}

impl ConstructionSchedule {
    pub fn new(k: Vec<usize>) -> Self {
        ConstructionSchedule {
            k,
            free: BTreeMap::new(),
            min_coefficient: 2,
            b: None,
            auto_adjust: false,
        }
    }

    pub fn with_free(mut self, position: usize, value: u64) -> Self {
        self.free.insert(position, value);
        self
    }

    pub fn with_b(mut self, b: Vec<u64>) -> Self {
        self.b = Some(b);
        self
    }

    pub fn solved_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.k.iter().skip(1).copied()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        match self.k.first() {
            None => return bad("schedule needs at least one index".into()),
            Some(&k1) if k1 < 2 => return bad(format!("k_1 = {k1} must be >= 2")),
            _ => {}
        }
        for (l, w) in self.k.windows(2).enumerate() {
            if w[1] < w[0] + 2 {
                return bad(format!("k_{} = {} and k_{} = {} are closer than 2", l + 1, w[0], l + 2, w[1]));
            }
        }
        if self.min_coefficient == 0 {
            return bad("min_coefficient must be >= 1".into());
        }
        for (&pos, &v) in &self.free {
            if pos == 0 {
                return bad("free positions start at 1".into());
            }
            if v < self.min_coefficient {
                return bad(format!(
                    "free coefficient a_{pos} = {v} is below min_coefficient {}",
                    self.min_coefficient
                ));
            }
            if self.solved_positions().any(|k| k == pos) {
                return bad(format!("position {pos} is solved by the construction and cannot be free"));
            }
            if pos > *self.k.last().unwrap() {
                return bad(format!("free position {pos} lies beyond the last scheduled index"));
            }
        }
        if let Some(b) = &self.b {
            if b.len() + 1 != self.k.len() {
                return bad(format!("expected {} multipliers b_l, got {}", self.k.len() - 1, b.len()));
            }
            if b.contains(&0) {
                return bad("multipliers b_l must be >= 1".into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Simple,
    General,
    Extended,
    #[serde(rename = "3d")]
    ThreeD,
}

/// A denominator shared by several coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Step index on the `alpha_2` side.
    pub l: usize,
    #[serde(with = "crate::decimal")]
    pub q: BigUint,
    /// For each coordinate, the convergent index `n` with `q_n = q`.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedCoefficient {
    pub step: usize,
    pub position: usize,
    pub value: u64,
    #[serde(with = "crate::decimal")]
    pub rhs: BigUint,
    #[serde(with = "crate::decimal")]
    pub modulus: BigUint,
}

/// The identity `q_{k_{l+1}}(alpha_1) = A q_l(alpha_2) + b q_{l-1}(alpha_2)`
/// realized by one step of the extended construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionStep {
    pub l: usize,
    pub b: u64,
    #[serde(with = "crate::decimal")]
    pub alpha1_q: BigUint,
    #[serde(with = "crate::decimal")]
    pub multiplier: BigUint,
    #[serde(with = "crate::decimal")]
    pub alpha2_q: BigUint,
    #[serde(with = "crate::decimal")]
    pub alpha2_q_prev: BigUint,
    /// Whether `alpha1_q` is itself `q_{l+1}(alpha_2)`, which happens iff
    /// `b = 1`.
    pub exact_match: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructedTuple {
    pub kind: ConstructionKind,
    pub dimension: usize,
    pub streams: Vec<CoefficientStream>,
    /// `Some(j)` when coordinate `i` is `1 - alpha_j`; realized exactly from
    /// coordinate `j` at truncation time.
    pub complement_of: Vec<Option<usize>>,
    pub ledger: Vec<LedgerEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solved_coefficients: Vec<SolvedCoefficient>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extension: Vec<ExtensionStep>,
    /// Number of coefficients of each stream fixed by the construction; the
    /// remainder is the periodic tail.
    pub constructed_depths: Vec<usize>,
}

impl ConstructedTuple {
    pub fn ledger_denominators(&self) -> Vec<BigUint> {
        self.ledger.iter().map(|e| e.q.clone()).collect()
    }

    /// All coefficients past `a_1` of every stream are at least 2 over the
    /// constructed depth and in the tail.
    pub fn one_distance_ready(&self) -> bool {
        self.streams.iter().zip(&self.constructed_depths).all(|(s, &depth)| {
            let tail_ok = match s.tail() {
                cf::Tail::Periodic(p) => p.iter().all(|&a| a >= 2),
                cf::Tail::Terminate => true,
                cf::Tail::Rule(_) => false,
            };
            tail_ok && (2..=depth.max(1)).all(|i| s.coefficient(i).map_or(true, |a| a >= 2))
        })
    }
}

/// `gcd(a_{k_{l+1}-1} q_{k_{l+1}-2} + q_{k_{l+1}-3}, q_{k_l}) = 1` is
/// guaranteed when, with `b = gcd(q_{k_l}, q_{k_{l+1}-2})`, `c = q_{k_l} / b`,
/// `d = gcd(c, q_{k_{l+1}-3})` and `e = c / d`, the coefficient is coprime to
/// `d` and divisible by `e`. Sufficient, not necessary.
pub fn coprimality_condition(q_kl: &BigUint, q_km2: &BigUint, q_km3: &BigUint, a_km1: u64) -> Result<bool> {
    let parts = condition_parts(q_kl, q_km2, q_km3, a_km1)?;
    let a = BigUint::from(a_km1);
    Ok(parts.d.gcd(&a).is_one() && (&a % &parts.e).is_zero())
}

struct ConditionParts {
    d: BigUint,
    e: BigUint,
}

fn condition_parts(q_kl: &BigUint, q_km2: &BigUint, q_km3: &BigUint, a_km1: u64) -> Result<ConditionParts> {
    if q_kl.is_zero() || q_km2.is_zero() || q_km3.is_zero() || a_km1 == 0 {
        return Err(Error::Precondition("coprimality condition needs positive inputs".into()));
    }
    if q_km2 <= q_km3 {
        return Err(Error::Precondition(format!(
            "denominators out of order: q_{{k-2}} = {q_km2} <= q_{{k-3}} = {q_km3}"
        )));
    }
    let b = q_kl.gcd(q_km2);
    let c = q_kl / &b;
    let d = c.gcd(q_km3);
    let e = &c / &d;
    Ok(ConditionParts { d, e })
}

/// Smallest `a >= min` of the form `e t` with `gcd(d, a) = 1`; `None` when
/// `d` and `e` share a factor, in which case no coefficient satisfies the
/// condition.
pub fn suggest_coefficient(q_kl: &BigUint, q_km2: &BigUint, q_km3: &BigUint, min: u64) -> Result<Option<u64>> {
    let ConditionParts { d, e } = condition_parts(q_kl, q_km2, q_km3, 1)?;
    if !d.gcd(&e).is_one() {
        return Ok(None);
    }
    let Some(e) = e.to_u64() else { return Ok(None) };
    let mut t = min.max(1).div_ceil(e).max(1);
    loop {
        if d.gcd(&BigUint::from(t)).is_one() {
            return Ok(e.checked_mul(t));
        }
        t += 1;
    }
}

/// Smallest `a >= min_a` with `a q_m1 + q_m2 = rhs (mod modulus)`.
pub fn solve_congruence(
    q_m1: &BigUint,
    q_m2: &BigUint,
    modulus: &BigUint,
    rhs: &BigUint,
    min_a: u64,
) -> Result<BigUint> {
    if modulus.is_zero() {
        return Err(Error::Precondition("modulus must be positive".into()));
    }
    if rhs >= modulus {
        return Err(Error::Precondition(format!("rhs {rhs} must be below the modulus {modulus}")));
    }
    let m = BigInt::from(modulus.clone());
    let ext = BigInt::from(q_m1.clone()).extended_gcd(&m);
    if !ext.gcd.is_one() {
        return Err(Error::Inadmissible {
            q_m1: q_m1.to_string(),
            modulus: modulus.to_string(),
            gcd: ext.gcd.to_string(),
        });
    }
    let inverse = ext.x.mod_floor(&m);
    let target = (BigInt::from(rhs.clone()) - BigInt::from(q_m2.clone())).mod_floor(&m);
    let base = (target * inverse).mod_floor(&m).to_biguint().expect("mod_floor is non-negative");
    let min = BigUint::from(min_a);
    if base >= min {
        return Ok(base);
    }
    let steps = (&min - &base).div_ceil(modulus);
    Ok(base + steps * modulus)
}

/// `b <= a` and `a / (2b) > 2`.
pub fn extension_side_condition(a: u64, b: u64) -> Result<()> {
    if b == 0 || b > a {
        return Err(Error::Precondition(format!("need 1 <= b <= a, got a = {a}, b = {b}")));
    }
    if a as u128 <= 4 * b as u128 {
        return Err(Error::Precondition(format!("a / (2b) = {a}/{} is not > 2", 2 * b)));
    }
    Ok(())
}

/// The pair `(alpha, 1 - alpha)` for `alpha = [0; 1, a_2, ...]`, with the
/// shared denominators `q_i(1 - alpha) = q_{i+1}(alpha)` recorded for
/// `i = 1..depth-1`.
pub fn simple_pair(alpha1: &CoefficientStream, depth: usize) -> Result<ConstructedTuple> {
    let alpha2 = cf::complement(alpha1)?;
    let depth = alpha1.len().map_or(depth, |n| depth.min(n));
    let q1 = cf::denominators(alpha1, depth)?;
    let ledger = (1..depth)
        .map(|i| LedgerEntry { l: i, q: q1[i + 1].clone(), indices: vec![i + 1, i] })
        .collect();
    Ok(ConstructedTuple {
        kind: ConstructionKind::Simple,
        dimension: 2,
        streams: vec![alpha1.clone(), alpha2],
        complement_of: vec![None, Some(0)],
        ledger,
        solved_coefficients: Vec::new(),
        extension: Vec::new(),
        constructed_depths: vec![depth, depth.saturating_sub(1)],
    })
}

/// Incremental denominators with the `q_{-2} = 1, q_{-1} = 0` seeds.
struct Denominators {
    coefficients: Vec<u64>,
    q: Vec<BigUint>,
}

impl Denominators {
    fn new() -> Self {
        // a_0 = 0, q_0 = 1
        Denominators { coefficients: vec![0], q: vec![BigUint::one()] }
    }

    fn push(&mut self, a: u64) {
        let n = self.q.len();
        let prev2 = if n >= 2 { self.q[n - 2].clone() } else { BigUint::zero() };
        let next = BigUint::from(a) * &self.q[n - 1] + prev2;
        self.coefficients.push(a);
        self.q.push(next);
    }

    fn at(&self, n: usize) -> &BigUint {
        &self.q[n]
    }
}

pub fn general_construct(alpha1_free: &CoefficientStream, schedule: &ConstructionSchedule) -> Result<ConstructedTuple> {
    build_pair(alpha1_free, schedule, ConstructionKind::General)
}

/// Like [`general_construct`] with target `b_l q_{l-1}(alpha_2)`.
///
/// Every step realizes `q_{k_{l+1}}(alpha_1) = A q_l(alpha_2) + b_l
/// q_{l-1}(alpha_2)` exactly; the next `alpha_2` denominator is
/// `A q_l + q_{l-1}`, so for `b_l > 1` the two sequences stop sharing that
/// denominator and later congruences are taken modulo `alpha_2`'s own
/// denominators. Only exact coincidences enter the ledger.
pub fn extended_construct(alpha1_free: &CoefficientStream, schedule: &ConstructionSchedule) -> Result<ConstructedTuple> {
    if schedule.b.is_none() {
        return Err(Error::Precondition("extended construction needs multipliers b".into()));
    }
    build_pair(alpha1_free, schedule, ConstructionKind::Extended)
}

pub fn construct_3d(alpha1_free: &CoefficientStream, schedule: &ConstructionSchedule) -> Result<ConstructedTuple> {
    let mut t = build_pair(alpha1_free, schedule, ConstructionKind::ThreeD)?;
    if t.streams[0].coefficient(1) != Some(1) {
        return Err(Error::Precondition("the three dimensional construction needs a_1 = 1".into()));
    }
    let alpha3 = cf::complement(&t.streams[0])?;
    for e in &mut t.ledger {
        e.indices.push(e.indices[0] - 1);
    }
    t.streams.push(alpha3);
    t.complement_of.push(Some(0));
    t.constructed_depths.push(t.constructed_depths[0] - 1);
    t.dimension = 3;
    Ok(t)
}

fn build_pair(
    alpha1_free: &CoefficientStream,
    schedule: &ConstructionSchedule,
    kind: ConstructionKind,
) -> Result<ConstructedTuple> {
    schedule.validate()?;
    if alpha1_free.a0() != 0 {
        return Err(Error::Precondition("alpha_1 must lie in (0,1)".into()));
    }
    let min = schedule.min_coefficient;
    let free_at = |pos: usize| -> Result<u64> {
        schedule
            .free
            .get(&pos)
            .copied()
            .or_else(|| alpha1_free.coefficient(pos))
            .ok_or_else(|| Error::Precondition(format!("no coefficient given for free position {pos}")))
    };

    let k = &schedule.k;
    let mut one = Denominators::new();
    for pos in 1..=k[0] {
        one.push(free_at(pos)?);
    }
    // alpha_2 = [0; q_{k_1}, ...]
    let mut two = Denominators::new();
    let first = one.at(k[0]).to_u64().ok_or_else(|| Error::CoefficientOverflow(one.at(k[0]).to_string()))?;
    two.push(first);

    let mut ledger = vec![LedgerEntry { l: 1, q: one.at(k[0]).clone(), indices: vec![k[0], 1] }];
    let mut solved = Vec::new();
    let mut extension = Vec::new();

    for l in 1..k.len() {
        let (kl, knext) = (k[l - 1], k[l]);
        for pos in kl + 1..=knext - 2 {
            one.push(free_at(pos)?);
        }

        let modulus = two.at(l).clone();
        let (q_km2, q_km3) = (one.at(knext - 2).clone(), one.at(knext - 3).clone());
        let mut a_km1 = free_at(knext - 1)?;
        if !coprimality_condition(&modulus, &q_km2, &q_km3, a_km1)? {
            let suggestion = suggest_coefficient(&modulus, &q_km2, &q_km3, min)?;
            match suggestion {
                Some(s) if schedule.auto_adjust => a_km1 = s,
                _ => {
                    return Err(Error::Construction {
                        step: l,
                        reason: format!(
                            "a_{} = {a_km1} violates the coprimality condition for q = {modulus}{}",
                            knext - 1,
                            suggestion.map_or(String::from("; no coefficient satisfies it"), |s| format!(
                                "; smallest admissible value is {s}"
                            ))
                        ),
                    })
                }
            }
        }
        one.push(a_km1);

        let b = schedule.b.as_ref().map_or(1, |b| b[l - 1]);
        let q2_prev = two.at(l - 1).clone();
        let target = BigUint::from(b) * &q2_prev;
        let rhs = &target % &modulus;
        let a = solve_congruence(one.at(knext - 1), &q_km2, &modulus, &rhs, min)
            .map_err(|e| Error::Construction { step: l, reason: e.to_string() })?;
        let a = a.to_u64().ok_or_else(|| Error::CoefficientOverflow(a.to_string()))?;
        if kind == ConstructionKind::Extended {
            extension_side_condition(a, b).map_err(|e| Error::Construction { step: l, reason: e.to_string() })?;
        }
        one.push(a);
        solved.push(SolvedCoefficient { step: l, position: knext, value: a, rhs, modulus: modulus.clone() });

        let q1 = one.at(knext).clone();
        if q1 < target {
            return Err(Error::Invariant(format!("q_{knext} = {q1} is below the target {target}")));
        }
        let (multiplier, remainder) = (&q1 - &target).div_rem(&modulus);
        if !remainder.is_zero() {
            return Err(Error::Invariant(format!(
                "back-solve at step {l} is inexact: ({q1} - {target}) mod {modulus} = {remainder}"
            )));
        }
        if multiplier.is_zero() {
            return Err(Error::Invariant(format!("alpha_2 coefficient at step {l} is zero")));
        }
        let m = multiplier.to_u64().ok_or_else(|| Error::CoefficientOverflow(multiplier.to_string()))?;
        two.push(m);
        let exact = two.at(l + 1) == &q1;
        if exact {
            ledger.push(LedgerEntry { l: l + 1, q: q1.clone(), indices: vec![knext, l + 1] });
        }
        if kind == ConstructionKind::Extended {
            extension.push(ExtensionStep {
                l,
                b,
                alpha1_q: q1,
                multiplier,
                alpha2_q: modulus,
                alpha2_q_prev: q2_prev,
                exact_match: exact,
            });
        }
    }

    let depth1 = *k.last().unwrap();
    let alpha1 = CoefficientStream::periodic(one.coefficients[1..].to_vec(), vec![min])?;
    let alpha2 = CoefficientStream::periodic(two.coefficients[1..].to_vec(), vec![min])?;
    Ok(ConstructedTuple {
        kind,
        dimension: 2,
        constructed_depths: vec![depth1, k.len()],
        streams: vec![alpha1, alpha2],
        complement_of: vec![None, None],
        ledger,
        solved_coefficients: solved,
        extension,
    })
}

/// Recomputes every coordinate's denominators from its stream and checks that
/// each ledger entry appears at the recorded index of every coordinate.
pub fn verify_ledger(tuple: &ConstructedTuple) -> Result<()> {
    for entry in &tuple.ledger {
        for (c, (&n, stream)) in entry.indices.iter().zip(&tuple.streams).enumerate() {
            let qs = cf::denominators(stream, n)?;
            if qs[n] != entry.q {
                return Err(Error::Invariant(format!(
                    "ledger l = {}: coordinate {c} has q_{n} = {}, expected {}",
                    entry.l, qs[n], entry.q
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> CoefficientStream {
        text.parse().unwrap()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn qs(stream: &CoefficientStream, depth: usize) -> Vec<u64> {
        cf::denominators(stream, depth).unwrap().iter().map(|q| q.to_u64().unwrap()).collect()
    }

    #[test]
    fn simple_pair_fibonacci_shift() {
        let t = simple_pair(&s("0;(1)"), 10).unwrap();
        assert_eq!(t.streams[1].to_string(), "0;2,(1)");
        assert_eq!(qs(&t.streams[1], 5)[1..], qs(&t.streams[0], 6)[2..]);
        verify_ledger(&t).unwrap();
    }

    #[test]
    fn simple_pair_silver() {
        let t = simple_pair(&s("0;1,(2)"), 6).unwrap();
        assert_eq!(t.streams[1].to_string(), "0;3,(2)");
        assert_eq!(qs(&t.streams[0], 5), vec![1, 1, 3, 7, 17, 41]);
        assert_eq!(qs(&t.streams[1], 4)[1..], [3, 7, 17, 41]);
        let ledger: Vec<u64> = t.ledger.iter().map(|e| e.q.to_u64().unwrap()).collect();
        assert_eq!(ledger, vec![3, 7, 17, 41, 99]);
        verify_ledger(&t).unwrap();
    }

    #[test]
    fn simple_pair_terminating_values() {
        let t = simple_pair(&s("0;1,2,3"), 3).unwrap();
        assert_eq!(t.streams[1].to_string(), "0;3,3");
        assert_eq!(cf::value_of(&t.streams[0], 3).unwrap().to_string(), "7/10");
        assert_eq!(cf::value_of(&t.streams[1], 2).unwrap().to_string(), "3/10");
        assert!(simple_pair(&s("0;2,3"), 2).is_err());
    }

    #[test]
    fn coprimality_condition_examples() {
        // q_{k_{l+1}-2} = q_{k_l}: b = q_{k_l}, so c = d = e = 1.
        assert!(coprimality_condition(&big(5), &big(5), &big(3), 4).unwrap());
        // gcd(5, 3) = 1 gives c = 5, d = 1, e = 5, and 5 does not divide 4.
        assert!(!coprimality_condition(&big(5), &big(3), &big(2), 4).unwrap());
        assert!(coprimality_condition(&big(15), &big(10), &big(7), 6).unwrap());
        assert!(!coprimality_condition(&big(15), &big(10), &big(7), 4).unwrap());
        assert!(coprimality_condition(&big(0), &big(10), &big(7), 4).is_err());
        assert!(coprimality_condition(&big(15), &big(7), &big(10), 4).is_err());
    }

    #[test]
    fn suggestions_satisfy_the_condition() {
        assert_eq!(suggest_coefficient(&big(15), &big(10), &big(7), 2).unwrap(), Some(3));
        assert_eq!(suggest_coefficient(&big(15), &big(10), &big(7), 4).unwrap(), Some(6));
        // c = 9, d = gcd(9, 3) = 3, e = 3: no multiple of 3 is coprime to 3
        assert_eq!(suggest_coefficient(&big(9), &big(5), &big(3), 2).unwrap(), None);
    }

    #[test]
    fn congruence_examples() {
        assert_eq!(solve_congruence(&big(7), &big(3), &big(5), &big(2), 2).unwrap(), big(2));
        assert_eq!(solve_congruence(&big(1), &big(0), &big(1), &big(0), 2).unwrap(), big(2));
        assert_eq!(solve_congruence(&big(3), &big(1), &big(7), &big(4), 2).unwrap(), big(8));
        assert!(matches!(
            solve_congruence(&big(6), &big(1), &big(9), &big(4), 2),
            Err(Error::Inadmissible { .. })
        ));
        assert!(solve_congruence(&big(3), &big(1), &big(7), &big(7), 2).is_err());
    }

    #[test]
    fn congruence_matches_enumeration() {
        for m in 1u64..30 {
            for q1 in 1u64..20 {
                if num_integer::gcd(q1, m) != 1 {
                    continue;
                }
                for q2 in 0..5u64 {
                    for rhs in 0..m {
                        let a = solve_congruence(&big(q1), &big(q2), &big(m), &big(rhs), 2).unwrap();
                        let brute = (2u64..).find(|a| (a * q1 + q2) % m == rhs).unwrap();
                        assert_eq!(a, big(brute));
                    }
                }
            }
        }
    }

    #[test]
    fn side_condition() {
        assert!(extension_side_condition(9, 2).is_ok());
        assert!(extension_side_condition(8, 2).is_err());
        assert!(extension_side_condition(5, 1).is_ok());
        assert!(extension_side_condition(3, 4).is_err());
    }

    #[test]
    fn general_two_steps() {
        let t = general_construct(&s("0;1,(2)"), &ConstructionSchedule::new(vec![2, 4])).unwrap();
        // q_2 = 3, a_3 = 2 gives q_3 = 7; 7a + 3 = 1 (mod 3) needs a = 1 (mod 3), so a_4 = 4
        assert_eq!(t.streams[0].to_string(), "0;1,2,2,4,(2)");
        assert_eq!(t.streams[1].to_string(), "0;3,10,(2)");
        let ledger: Vec<u64> = t.ledger.iter().map(|e| e.q.to_u64().unwrap()).collect();
        assert_eq!(ledger, vec![3, 31]);
        verify_ledger(&t).unwrap();
    }

    #[test]
    fn single_index_schedule() {
        let t = general_construct(&s("0;2,3"), &ConstructionSchedule::new(vec![2])).unwrap();
        assert_eq!(t.streams[1].prefix(), &[7]);
        assert_eq!(t.ledger.len(), 1);
        assert_eq!(t.ledger[0].q, big(7));
    }

    #[test]
    fn gap_two_schedules_always_succeed() {
        for prefix in ["0;2,(3)", "0;1,(2)", "0;4,2,(5,2)"] {
            let t = general_construct(&s(prefix), &ConstructionSchedule::new(vec![2, 4, 6, 8])).unwrap();
            assert_eq!(t.ledger.len(), 4);
            verify_ledger(&t).unwrap();
            assert!(t.one_distance_ready() || prefix.starts_with("0;1"));
        }
    }

    #[test]
    fn condition_failure_names_the_step() {
        // k = (2, 5): free a_3, a_4. With a_1 = a_2 = 3 we get q_2 = 10, q_3 = 30 + 3 = 33,
        // then b = gcd(10, 33) = 1, c = 10, d = gcd(10, 10) = 10, e = 1; a_4 = 2
        // shares the factor 2 with d.
        let sched = ConstructionSchedule::new(vec![2, 5]).with_free(3, 3).with_free(4, 2);
        let err = general_construct(&s("0;3,3"), &sched).unwrap_err();
        assert!(matches!(err, Error::Construction { step: 1, .. }), "{err}");
        let mut sched = sched;
        sched.auto_adjust = true;
        let t = general_construct(&s("0;3,3"), &sched).unwrap();
        assert_eq!(t.streams[0].coefficient(4), Some(3));
        verify_ledger(&t).unwrap();
    }

    #[test]
    fn schedule_validation() {
        assert!(ConstructionSchedule::new(vec![1, 3]).validate().is_err());
        assert!(ConstructionSchedule::new(vec![2, 3]).validate().is_err());
        assert!(ConstructionSchedule::new(vec![]).validate().is_err());
        assert!(ConstructionSchedule::new(vec![2, 4]).with_free(4, 2).validate().is_err());
        assert!(ConstructionSchedule::new(vec![2, 5]).with_free(3, 1).validate().is_err());
        assert!(ConstructionSchedule::new(vec![2, 4]).with_b(vec![1, 1]).validate().is_err());
    }

    #[test]
    fn schedule_json_round_trip() {
        let json = r#"{"k":[2,4,7], "free":{"3":2,"5":3,"6":2}, "min_coefficient":2, "b":[1,1]}"#;
        let sched: ConstructionSchedule = serde_json::from_str(json).unwrap();
        assert_eq!(sched.k, vec![2, 4, 7]);
        assert_eq!(sched.free.get(&5), Some(&3));
        assert_eq!(sched.b, Some(vec![1, 1]));
        let back: ConstructionSchedule = serde_json::from_str(&serde_json::to_string(&sched).unwrap()).unwrap();
        assert_eq!(back, sched);
    }

    #[test]
    fn extended_with_unit_multipliers_is_general() {
        let sched = ConstructionSchedule::new(vec![2, 4, 6]);
        let general = general_construct(&s("0;3,(5)"), &sched).unwrap();
        let extended = match extended_construct(&s("0;3,(5)"), &sched.clone().with_b(vec![1, 1])) {
            Ok(t) => t,
            // the side condition a > 4b can reject small solutions even for b = 1
            Err(e) => panic!("{e}"),
        };
        assert_eq!(general.streams[0], extended.streams[0]);
        assert_eq!(general.streams[1], extended.streams[1]);
        assert_eq!(general.ledger, extended.ledger);
        assert!(extended.extension.iter().all(|x| x.exact_match));
    }

    #[test]
    fn extended_identity_holds_for_larger_multipliers() {
        let sched = ConstructionSchedule::new(vec![2, 4, 6]).with_b(vec![2, 1]);
        match extended_construct(&s("0;3,(5)"), &sched) {
            Ok(t) => {
                for x in &t.extension {
                    assert_eq!(x.alpha1_q, &x.multiplier * &x.alpha2_q + BigUint::from(x.b) * &x.alpha2_q_prev);
                    assert_eq!(x.exact_match, x.b == 1);
                }
                verify_ledger(&t).unwrap();
            }
            Err(Error::Construction { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn three_dimensional_ledger() {
        let t = construct_3d(&s("0;1,(2)"), &ConstructionSchedule::new(vec![2, 4])).unwrap();
        assert_eq!(t.dimension, 3);
        assert_eq!(t.streams[2].to_string(), "0;3,2,4,(2)");
        let ledger: Vec<u64> = t.ledger.iter().map(|e| e.q.to_u64().unwrap()).collect();
        assert_eq!(ledger, vec![3, 31]);
        for e in &t.ledger {
            assert_eq!(e.indices.len(), 3);
        }
        verify_ledger(&t).unwrap();
        assert!(construct_3d(&s("0;2,(2)"), &ConstructionSchedule::new(vec![2, 4])).is_err());
    }
}
