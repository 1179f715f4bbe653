//! Continued-fraction streams and their convergents.
//!
//! A [`CoefficientStream`] is `[a0; a1, a2, ...]` given as a finite prefix plus
//! a tail, which either terminates, repeats a fixed period, or is computed from
//! the coefficient index by a pure function.
//!
//! Convergents follow the usual recurrences
//! `p_n = a_n p_{n-1} + p_{n-2}` and `q_n = a_n q_{n-1} + q_{n-2}`
//! seeded with `p_{-2} = 0, p_{-1} = 1, q_{-2} = 1, q_{-1} = 0`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::ExactRational;

/// Coefficient map for programmatic tails, keyed by absolute index `i >= 1`.
pub type CoefficientRule = Arc<dyn Fn(usize) -> u64 + Send + Sync>;

#[derive(Clone)]
pub enum Tail {
    Terminate,
    /// Repeats forever after the prefix.
    Periodic(Vec<u64>),
    Rule(CoefficientRule),
}

impl fmt::Debug for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Terminate => write!(f, "Terminate"),
            Tail::Periodic(p) => f.debug_tuple("Periodic").field(p).finish(),
            Tail::Rule(_) => write!(f, "Rule(..)"),
        }
    }
}

/// An immutable continued-fraction expansion `[a0; a1, a2, ...]`.
#[derive(Clone, Debug)]
pub struct CoefficientStream {
    a0: u64,
    prefix: Vec<u64>,
    tail: Tail,
}

impl CoefficientStream {
    /// Validates that every coefficient after `a0` is positive.
    pub fn new(a0: u64, prefix: Vec<u64>, tail: Tail) -> Result<Self> {
        if let Some(pos) = prefix.iter().position(|&a| a == 0) {
            return Err(Error::Precondition(format!(
                "coefficient a_{} must be >= 1",
                pos + 1
            )));
        }
        match &tail {
            Tail::Periodic(p) if p.is_empty() => {
                return Err(Error::Precondition("empty period".into()))
            }
            Tail::Periodic(p) if p.contains(&0) => {
                return Err(Error::Precondition("periodic coefficient must be >= 1".into()))
            }
            _ => {}
        }
        Ok(CoefficientStream { a0, prefix, tail })
    }

    pub fn terminating(prefix: Vec<u64>) -> Result<Self> {
        Self::new(0, prefix, Tail::Terminate)
    }

    pub fn periodic(prefix: Vec<u64>, period: Vec<u64>) -> Result<Self> {
        Self::new(0, prefix, Tail::Periodic(period))
    }

    /// The rule is only consulted for indices past the prefix. Zero values are
    /// rejected lazily by [`CoefficientStream::coefficient`] callers through
    /// the recurrence checks, so rules must return positive values.
    pub fn with_rule(prefix: Vec<u64>, rule: CoefficientRule) -> Result<Self> {
        Self::new(0, prefix, Tail::Rule(rule))
    }

    pub fn a0(&self) -> u64 {
        self.a0
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn is_terminating(&self) -> bool {
        matches!(self.tail, Tail::Terminate)
    }

    /// Number of coefficients after `a0`, `None` when infinite.
    pub fn len(&self) -> Option<usize> {
        match self.tail {
            Tail::Terminate => Some(self.prefix.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Coefficient `a_i`; `a_0` for `i = 0`, `None` past the end of a
    /// terminating stream.
    pub fn coefficient(&self, i: usize) -> Option<u64> {
        if i == 0 {
            return Some(self.a0);
        }
        if let Some(&a) = self.prefix.get(i - 1) {
            return Some(a);
        }
        let past = i - 1 - self.prefix.len();
        match &self.tail {
            Tail::Terminate => None,
            Tail::Periodic(p) => Some(p[past % p.len()]),
            Tail::Rule(rule) => Some(rule(i)),
        }
    }

    /// Coefficients `a_1..=a_n`.
    pub fn take(&self, n: usize) -> Result<Vec<u64>> {
        (1..=n)
            .map(|i| self.coefficient(i).ok_or(Error::DepthExceeded { requested: n, max: i - 1 }))
            .collect()
    }

    /// Moves the first `n` tail coefficients into the prefix.
    fn materialize(&self, n: usize) -> Result<Self> {
        if self.prefix.len() >= n {
            return Ok(self.clone());
        }
        let prefix = self.take(n)?;
        let tail = match &self.tail {
            Tail::Terminate => Tail::Terminate,
            Tail::Periodic(p) => {
                let shift = (n - self.prefix.len()) % p.len();
                let mut rotated = p.clone();
                rotated.rotate_left(shift);
                Tail::Periodic(rotated)
            }
            Tail::Rule(r) => Tail::Rule(r.clone()),
        };
        Ok(CoefficientStream { a0: self.a0, prefix, tail })
    }

    /// Drops `a_1`, renumbering `a_{i+1}` as `a_i`.
    fn shift(&self) -> Result<Self> {
        let s = self.materialize(1)?;
        let tail = match &s.tail {
            Tail::Rule(r) => {
                let r = r.clone();
                Tail::Rule(Arc::new(move |i| r(i + 1)))
            }
            t => t.clone(),
        };
        Ok(CoefficientStream { a0: s.a0, prefix: s.prefix[1..].to_vec(), tail })
    }

    /// Merges a trailing coefficient 1 into its predecessor so that every
    /// rational has exactly one terminating expansion.
    pub fn canonicalize(&self) -> Self {
        let mut out = self.clone();
        if out.is_terminating() && out.prefix.len() >= 2 && out.prefix.last() == Some(&1) {
            out.prefix.pop();
            *out.prefix.last_mut().unwrap() += 1;
        }
        out
    }

    /// Truncation to `a_1..=a_depth` as a terminating stream.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        Ok(CoefficientStream { a0: self.a0, prefix: self.take(depth)?, tail: Tail::Terminate })
    }
}

/// Streams compare equal when their text notation agrees; rule tails are
/// never equal to anything, not even themselves.
impl PartialEq for CoefficientStream {
    fn eq(&self, other: &Self) -> bool {
        if matches!(self.tail, Tail::Rule(_)) || matches!(other.tail, Tail::Rule(_)) {
            return false;
        }
        self.to_string() == other.to_string()
    }
}

impl fmt::Display for CoefficientStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.a0)?;
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{}", join(&self.prefix))?;
        let sep = if self.prefix.is_empty() { "" } else { "," };
        match &self.tail {
            Tail::Terminate => Ok(()),
            Tail::Periodic(p) => write!(f, "{sep}({})", join(p)),
            Tail::Rule(_) => write!(f, "{sep}..."),
        }
    }
}

impl FromStr for CoefficientStream {
    type Err = Error;

    /// Parses `"0;1,2,2"` or `"0;1,(2,3)"`. Surrounding brackets are optional.
    fn from_str(input: &str) -> Result<Self> {
        let trimmed = input.trim();
        let offset = input.len() - input.trim_start().len();
        let (body, offset) = match trimmed.strip_prefix('[') {
            Some(rest) => (
                rest.strip_suffix(']').ok_or(Error::Parse {
                    position: input.len(),
                    message: "missing closing ']'".into(),
                })?,
                offset + 1,
            ),
            None => (trimmed, offset),
        };
        let err = |position: usize, message: String| Error::Parse { position, message };
        let number = |tok: &str, pos: usize| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| err(pos, format!("expected a non-negative integer, found {:?}", tok.trim())))
        };

        let (head, rest, rest_pos) = match body.find(';') {
            Some(i) => (&body[..i], &body[i + 1..], offset + i + 1),
            None => (body, "", offset + body.len()),
        };
        let a0 = number(head, offset)?;

        let (plain, periodic, period_pos) = match rest.find('(') {
            Some(i) => {
                let inner = rest[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| err(rest_pos + rest.len(), "periodic tail must end with ')'".into()))?;
                (&rest[..i], Some(inner), rest_pos + i + 1)
            }
            None => (rest, None, 0),
        };

        let mut prefix = Vec::new();
        let mut pos = rest_pos;
        let plain_trim = plain.trim_end();
        let plain_trim = if periodic.is_some() {
            plain_trim.strip_suffix(',').unwrap_or(plain_trim)
        } else {
            plain_trim
        };
        if !plain_trim.trim().is_empty() {
            for tok in plain_trim.split(',') {
                prefix.push(number(tok, pos)?);
                pos += tok.len() + 1;
            }
        }
        let tail = match periodic {
            None => Tail::Terminate,
            Some(inner) => {
                let mut p = Vec::new();
                let mut pos = period_pos;
                for tok in inner.split(',') {
                    p.push(number(tok, pos)?);
                    pos += tok.len() + 1;
                }
                Tail::Periodic(p)
            }
        };
        CoefficientStream::new(a0, prefix, tail).map_err(|e| err(rest_pos, e.to_string()))
    }
}

impl serde::Serialize for CoefficientStream {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for CoefficientStream {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One convergent `p_n / q_n`. Indices start at `-2` for the seeds.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Convergent {
    pub n: i64,
    #[serde(with = "crate::decimal")]
    pub p: BigUint,
    #[serde(with = "crate::decimal")]
    pub q: BigUint,
}

impl Convergent {
    pub fn value(&self) -> ExactRational {
        ExactRational::new(BigInt::from(self.p.clone()), BigInt::from(self.q.clone()))
    }
}

/// Incremental convergent recurrence.
#[derive(Clone, Debug)]
pub struct ConvergentIter<'a> {
    stream: &'a CoefficientStream,
    n: usize,
    prev: (BigUint, BigUint),
    prev2: (BigUint, BigUint),
}

impl<'a> ConvergentIter<'a> {
    pub fn new(stream: &'a CoefficientStream) -> Self {
        ConvergentIter {
            stream,
            n: 0,
            prev: (BigUint::one(), BigUint::zero()),
            prev2: (BigUint::zero(), BigUint::one()),
        }
    }
}

impl Iterator for ConvergentIter<'_> {
    type Item = Convergent;

    fn next(&mut self) -> Option<Convergent> {
        let a = BigUint::from(self.stream.coefficient(self.n)?);
        let p = &a * &self.prev.0 + &self.prev2.0;
        let q = &a * &self.prev.1 + &self.prev2.1;
        self.prev2 = std::mem::replace(&mut self.prev, (p.clone(), q.clone()));
        let c = Convergent { n: self.n as i64, p, q };
        self.n += 1;
        Some(c)
    }
}

/// Convergents `n = 0..=depth`.
pub fn convergents(stream: &CoefficientStream, depth: usize) -> Result<Vec<Convergent>> {
    if let Some(max) = stream.len() {
        if depth > max {
            return Err(Error::DepthExceeded { requested: depth, max });
        }
    }
    Ok(ConvergentIter::new(stream).take(depth + 1).collect())
}

/// Denominators `q_0..=q_depth`.
pub fn denominators(stream: &CoefficientStream, depth: usize) -> Result<Vec<BigUint>> {
    Ok(convergents(stream, depth)?.into_iter().map(|c| c.q).collect())
}

/// `p_depth / q_depth`.
pub fn value_of(stream: &CoefficientStream, depth: usize) -> Result<ExactRational> {
    Ok(convergents(stream, depth)?.pop().expect("depth + 1 >= 1 convergents").value())
}

/// Smallest depth `K` whose denominator exceeds `bound`, capped at the stream
/// length for terminating streams.
pub fn depth_exceeding(stream: &CoefficientStream, bound: &BigUint) -> usize {
    let mut last = 0;
    for c in ConvergentIter::new(stream) {
        last = c.n as usize;
        if &c.q > bound {
            return last;
        }
    }
    last
}

/// Euclidean algorithm on `x` in `(0, 1)`, giving the canonical terminating
/// expansion.
pub fn rational_to_cf(x: &ExactRational) -> Result<CoefficientStream> {
    if !(*x > 0 && *x < 1) {
        return Err(Error::OutsideUnitInterval(x.to_string()));
    }
    let mut num = x.numerator().clone();
    let mut den = x.denominator().clone();
    let mut prefix = Vec::new();
    // x = num/den < 1, so a_0 = 0 and we start by inverting.
    while !num.is_zero() {
        let (a, r) = den.div_rem(&num);
        let a = a.to_u64().ok_or_else(|| Error::CoefficientOverflow(a.to_string()))?;
        prefix.push(a);
        den = num;
        num = r;
    }
    // The last quotient of the Euclidean algorithm is >= 2, so the result is
    // already canonical.
    CoefficientStream::terminating(prefix)
}

/// Expansion of `1 - alpha` for `alpha = [0; 1, a_2, a_3, ...]`, namely
/// `[0; a_2 + 1, a_3, ...]`.
pub fn complement(stream: &CoefficientStream) -> Result<CoefficientStream> {
    if stream.a0 != 0 || stream.coefficient(1) != Some(1) {
        return Err(Error::Precondition(format!(
            "complement needs a_0 = 0 and a_1 = 1, got {stream}"
        )));
    }
    if stream.len() == Some(1) {
        return Err(Error::Precondition("[0;1] equals 1, which has no complement in (0,1)".into()));
    }
    let mut out = stream.materialize(2)?.shift()?;
    out.prefix[0] += 1;
    Ok(out)
}
