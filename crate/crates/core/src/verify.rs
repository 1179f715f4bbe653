//! Executable checks of the nearest-neighbor and gap statements, with
//! counterexamples that can be re-confirmed by brute force.
//!
//! Sweeps over `N` use [`OrbitTable`]; every counterexample carries the exact
//! inputs needed by [`recheck_counterexample`], which recomputes the failing
//! quantity with the `O(N^2)` scan in [`crate::nn`].

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cf::{self, CoefficientStream, Tail};
use crate::circle::{circle_gaps, GapTracker};
use crate::construction::{simple_pair, ConstructedTuple, ConstructionKind};
use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::nn::{self, ScaledPoints};
use crate::orbit::OrbitTable;
use crate::rational::ExactRational;
use crate::truncation::{stable_depths, AlphaSpec, DepthPolicy};

/// Above this `N_max` the shifted-neighbor identity is checked on the offset
/// table instead of by direct scans.
pub const DIRECT_SCAN_LIMIT: u64 = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    /// Nothing applicable was found to check.
    VacuousPass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::VacuousPass => "vacuous pass",
            Verdict::Fail => "FAIL",
        })
    }
}

/// The first failing instance of a check, with everything needed to redo it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// More than three adjacent gaps, or gaps not summing to one.
    ThreeGap { alpha: ExactRational, n: u64, distinct: usize, total: ExactRational },
    /// `h_{1+k}(n+k) != h_1(n)` although `h_1(n+k) = h_1(n)`.
    ShiftedNeighbor { alpha: Vec<ExactRational>, metric: MetricSpec, n: u64, k: u64, h_shifted: u64, h_first: u64 },
    /// `h_1(q+1) != q` for a shared denominator `q`.
    FirstNeighbor { alpha: Vec<ExactRational>, metric: MetricSpec, q: u64, h1: u64 },
    /// `g_N` outside `[expected_min, expected_max]`.
    Distances {
        alpha: Vec<ExactRational>,
        metric: MetricSpec,
        index_base: u64,
        n: u64,
        g: usize,
        expected_min: usize,
        expected_max: usize,
    },
    /// `||left alpha|| < ||right alpha||` does not hold.
    Chain { alpha: ExactRational, level: usize, left: u64, right: u64 },
    /// `||n alpha||` is not larger than the largest of the claimed smallest
    /// values, attained at `largest`.
    Smallest { alpha: ExactRational, level: usize, n: u64, largest: u64 },
    /// No `N` in `from..=to` has a single nearest-neighbor distance under
    /// every metric.
    NoOneDistance { alpha: Vec<ExactRational>, metrics: Vec<MetricSpec>, from: u64, to: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub parameters: serde_json::Value,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub instances: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CheckReport {
    fn finish(
        check: &str,
        parameters: serde_json::Value,
        instances: u64,
        counterexample: Option<Counterexample>,
        notes: Vec<String>,
        start: Instant,
    ) -> Self {
        let verdict = match (&counterexample, instances) {
            (Some(_), _) => Verdict::Fail,
            (None, 0) => Verdict::VacuousPass,
            (None, _) => Verdict::Pass,
        };
        CheckReport { check: check.into(), parameters, verdict, counterexample, instances, notes, elapsed: start.elapsed() }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// True iff every report passed.
pub fn all_passed<'a>(reports: impl IntoIterator<Item = &'a CheckReport>) -> bool {
    reports.into_iter().all(CheckReport::passed)
}

fn stream_text(s: &CoefficientStream) -> String {
    s.to_string()
}

fn realize_stable(spec: &AlphaSpec, n_max: u64, metrics: &[MetricSpec]) -> Result<(Vec<ExactRational>, Vec<usize>)> {
    let depths = stable_depths(spec, n_max, DepthPolicy::Auto, metrics)?;
    Ok((spec.realize(&depths)?, depths))
}

fn to_u64(q: &BigUint) -> Option<u64> {
    q.to_u64()
}

// ---------------------------------------------------------------------------
// three gaps

/// At most three distinct adjacent gaps, summing to one, for every
/// `N <= n_max` of the orbit `{alpha}, ..., {N alpha}`.
pub fn check_three_gap(stream: &CoefficientStream, n_max: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let spec = AlphaSpec::new(vec![stream.clone()]);
    let depths = spec.auto_depths(n_max);
    let alpha = spec.realize(&depths)?.remove(0);
    let mut tracker = GapTracker::new(&alpha, 1);
    let mut counterexample = None;
    let mut instances = 0;
    for n in 1..=n_max {
        tracker.push();
        instances += 1;
        if tracker.distinct() > 3 || !tracker.sums_to_one() {
            let snap = tracker.snapshot();
            counterexample =
                Some(Counterexample::ThreeGap { alpha: alpha.clone(), n, distinct: snap.distinct(), total: snap.sum() });
            break;
        }
    }
    let params = json!({ "stream": stream_text(stream), "n_max": n_max, "depth": depths[0] });
    Ok(CheckReport::finish("three_gap", params, instances, counterexample, Vec::new(), start))
}

// ---------------------------------------------------------------------------
// shifted nearest neighbors

fn prefix_h(scaled: &ScaledPoints, pos: usize, len: usize, m: MetricSpec) -> u64 {
    let mut best: Option<(BigUint, usize)> = None;
    for other in 0..len {
        if other == pos {
            continue;
        }
        let k = scaled.key_numerator(pos, other, m);
        if best.as_ref().map_or(true, |(b, _)| k <= *b) {
            best = Some((k, other));
        }
    }
    best.map_or(0, |(_, o)| pos.abs_diff(o) as u64)
}

/// `h_{1+k}(n+k) = h_1(n)` whenever `h_1(n+k) = h_1(n)`, over all `n >= 2`,
/// `k >= 1`, `n + k <= n_max`.
pub fn check_lemma_part1(alpha: &[ExactRational], n_max: u64, metric: MetricSpec) -> Result<CheckReport> {
    let start = Instant::now();
    let params = json!({ "alpha": alpha, "n_max": n_max, "metric": metric });
    let mut notes = Vec::new();
    if n_max < 3 {
        return Ok(CheckReport::finish("lemma_part1", params, 0, None, notes, start));
    }
    let direct = n_max <= DIRECT_SCAN_LIMIT;
    let ps = nn::generate(alpha, n_max, 1)?;
    let scaled = direct.then(|| ScaledPoints::new(ps.points()));
    let table = if direct { None } else { Some(OrbitTable::new(alpha, n_max as usize, metric)?) };
    if !direct {
        notes.push(format!("N_max above {DIRECT_SCAN_LIMIT}: neighbors read from the offset table"));
    }
    let h = |i: u64, n: u64| -> Result<u64> {
        match (&scaled, &table) {
            (Some(s), _) => Ok(prefix_h(s, (i - 1) as usize, n as usize, metric)),
            (None, Some(t)) => t.h(i, n, 1),
            _ => unreachable!(),
        }
    };
    let h1: Vec<u64> = (0..=n_max).map(|n| if n < 2 { Ok(0) } else { h(1, n) }).collect::<Result<_>>()?;

    let mut instances = 0;
    let mut counterexample = None;
    'outer: for n in 2..n_max {
        for k in 1..=(n_max - n) {
            if h1[(n + k) as usize] != h1[n as usize] {
                continue;
            }
            instances += 1;
            let shifted = h(1 + k, n + k)?;
            if shifted != h1[n as usize] {
                counterexample = Some(Counterexample::ShiftedNeighbor {
                    alpha: alpha.to_vec(),
                    metric,
                    n,
                    k,
                    h_shifted: shifted,
                    h_first: h1[n as usize],
                });
                break 'outer;
            }
        }
    }
    Ok(CheckReport::finish("lemma_part1", params, instances, counterexample, notes, start))
}

// ---------------------------------------------------------------------------
// shared denominators

/// `h_1(q+1) = q` for every ledger denominator `q <= q_cap`, under every
/// metric.
pub fn check_lemma_part2(tuple: &ConstructedTuple, metrics: &[MetricSpec], q_cap: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let qs: Vec<u64> = tuple.ledger_denominators().iter().filter_map(to_u64).filter(|&q| q <= q_cap).collect();
    let mut params = json!({ "kind": tuple.kind, "q_cap": q_cap, "metrics": metrics, "ledger": qs });
    if qs.is_empty() {
        return Ok(CheckReport::finish("lemma_part2", params, 0, None, Vec::new(), start));
    }
    let n_max = qs.iter().max().unwrap() + 1;
    let spec = AlphaSpec::from_tuple(tuple);
    let (alpha, depths) = realize_stable(&spec, n_max, metrics)?;
    params["depths"] = json!(depths);

    let cases: Vec<(u64, MetricSpec)> = qs.iter().flat_map(|&q| metrics.iter().map(move |&m| (q, m))).collect();
    let results: Vec<Result<(u64, MetricSpec, u64)>> = cases
        .par_iter()
        .map(|&(q, m)| {
            let ps = nn::generate(&alpha, q + 1, 1)?;
            Ok((q, m, nn::nearest_neighbor(&ps, 1, m)?.h))
        })
        .collect();
    let mut counterexample = None;
    for r in results {
        let (q, metric, h1) = r?;
        if h1 != q {
            counterexample = Some(Counterexample::FirstNeighbor { alpha: alpha.clone(), metric, q, h1 });
            break;
        }
    }
    Ok(CheckReport::finish("lemma_part2", params, cases.len() as u64, counterexample, Vec::new(), start))
}

// ---------------------------------------------------------------------------
// sweeps and windows

/// Windows attached to a shared denominator `q`: two distances predicted on
/// `q+1..=2q`, one distance on `2q+1..=next`, where `next` is the smallest
/// denominator above `q` of any coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedWindow {
    pub q: u64,
    pub next: u64,
    pub two: (u64, u64),
    /// `None` when `2q >= next`.
    pub one: Option<(u64, u64)>,
}

impl PredictedWindow {
    pub fn is_empty(&self) -> bool {
        self.one.is_none()
    }

    /// Predicted `g_N` if `n` lies in one of the windows.
    pub fn predicted(&self, n: u64) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        if (self.two.0..=self.two.1).contains(&n) {
            return Some(2);
        }
        match self.one {
            Some((a, b)) if (a..=b).contains(&n) => Some(1),
            _ => None,
        }
    }
}

fn next_denominator(stream: &CoefficientStream, q: &BigUint) -> Option<BigUint> {
    cf::ConvergentIter::new(stream).map(|c| c.q).find(|d| d > q)
}

/// Windows for every ledger denominator, ascending.
pub fn predicted_windows(spec: &AlphaSpec, ledger: &[BigUint]) -> Vec<PredictedWindow> {
    let mut qs: Vec<&BigUint> = ledger.iter().collect();
    qs.sort();
    qs.dedup();
    qs.into_iter()
        .filter_map(|q| {
            let next = spec.streams.iter().map(|s| next_denominator(s, q)).collect::<Option<Vec<_>>>()?.into_iter().min()?;
            let (q, next) = (to_u64(q)?, to_u64(&next)?);
            let two = (q + 1, (2 * q).min(next));
            let one = (2 * q < next).then_some((2 * q + 1, next));
            Some(PredictedWindow { q, next, two, one })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowTag {
    pub q: u64,
    pub predicted_g: usize,
}

impl fmt::Display for WindowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}@q={}", self.predicted_g, self.q)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    /// One entry per metric, in the sweep's metric order.
    pub g: Vec<usize>,
    /// `h_1(N)` under the first metric.
    pub h1: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowTag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sweep {
    pub alpha: Vec<ExactRational>,
    pub depths: Vec<usize>,
    pub index_base: u64,
    pub n_max: u64,
    pub metrics: Vec<MetricSpec>,
    pub windows: Vec<PredictedWindow>,
    pub rows: Vec<SweepRow>,
}

/// Largest Euclidean (or other) `g_N` seen in one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub source: String,
    pub alpha: Vec<ExactRational>,
    pub index_base: u64,
    pub dimension: usize,
    pub metric: MetricSpec,
    pub n_max: u64,
    pub max_g: usize,
    pub at_n: u64,
}

impl Sweep {
    pub fn column(&self, metric: MetricSpec) -> Option<usize> {
        self.metrics.iter().position(|&m| m == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N");
        for m in &self.metrics {
            out.push_str(&format!(",g_{}", m.label()));
        }
        out.push_str(",h1,window\n");
        for r in &self.rows {
            out.push_str(&r.n.to_string());
            for g in &r.g {
                out.push_str(&format!(",{g}"));
            }
            out.push_str(&format!(",{},{}\n", r.h1, r.window.map(|w| w.to_string()).unwrap_or_default()));
        }
        out
    }

    pub fn log_entries(&self, source: &str) -> Vec<LogEntry> {
        self.metrics
            .iter()
            .enumerate()
            .filter_map(|(c, &metric)| {
                let best = self.rows.iter().max_by_key(|r| (r.g[c], std::cmp::Reverse(r.n)))?;
                Some(LogEntry {
                    source: source.into(),
                    alpha: self.alpha.clone(),
                    index_base: self.index_base,
                    dimension: self.alpha.len(),
                    metric,
                    n_max: self.n_max,
                    max_g: best.g[c],
                    at_n: best.n,
                })
            })
            .collect()
    }
}

/// `g_N` under every metric and `h_1(N)` for all `N <= n_max`, at depths
/// that pass the stability check.
pub fn sweep(
    spec: &AlphaSpec,
    ledger: &[BigUint],
    n_max: u64,
    metrics: &[MetricSpec],
    index_base: u64,
    policy: DepthPolicy,
) -> Result<Sweep> {
    if metrics.is_empty() {
        return Err(Error::Precondition("at least one metric is needed".into()));
    }
    if index_base > 1 || n_max < index_base + 1 {
        return Err(Error::Precondition(format!("need base 0 or 1 and N_max > base, got {index_base}, {n_max}")));
    }
    let depths = stable_depths(spec, n_max, policy, metrics)?;
    let alpha = spec.realize(&depths)?;
    let max_offset = (n_max - index_base) as usize;
    let tables: Vec<OrbitTable> =
        metrics.par_iter().map(|&m| OrbitTable::new(&alpha, max_offset, m)).collect::<Result<_>>()?;
    let windows = predicted_windows(spec, ledger);
    let rows = (index_base + 1..=n_max)
        .map(|n| {
            let g = tables.iter().map(|t| t.g(n, index_base)).collect::<Result<Vec<_>>>()?;
            let h1 = tables[0].h(1, n, index_base)?;
            let window = windows
                .iter()
                .find_map(|w| w.predicted(n).map(|predicted_g| WindowTag { q: w.q, predicted_g }));
            Ok(SweepRow { n, g, h1, window })
        })
        .collect::<Result<_>>()?;
    Ok(Sweep { alpha, depths, index_base, n_max, metrics: metrics.to_vec(), windows, rows })
}

/// Maximal runs of constant `g_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Run {
    pub from: u64,
    pub to: u64,
    pub g: usize,
}

fn runs(rows: &[SweepRow], column: usize, from: u64, to: u64) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    for r in rows.iter().filter(|r| r.n >= from && r.n <= to) {
        let g = r.g[column];
        match out.last_mut() {
            Some(run) if run.g == g && run.to + 1 == r.n => run.to = r.n,
            _ => out.push(Run { from: r.n, to: r.n, g }),
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowObservation {
    pub window: PredictedWindow,
    /// Whether the windows were asserted; empty windows are only reported.
    pub tested: bool,
    /// Part of the window lies beyond `N_max`.
    pub clipped: bool,
    /// Runs of `g_N` over `q+1..=min(next, N_max)`, per metric label.
    pub observed: BTreeMap<String, Vec<Run>>,
    /// The one-distance window held at every `N <= N_max` under every metric.
    pub one_distance_held: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    pub check: String,
    pub streams: Vec<String>,
    pub n_max: u64,
    pub metrics: Vec<MetricSpec>,
    pub depths: Vec<usize>,
    /// Whether window equalities (and `g_N <= 2`) were asserted.
    pub strict: bool,
    pub windows: Vec<WindowObservation>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub instances: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub sweep: Option<Sweep>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl WindowReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Windows whose one-distance part lies within `N_max` and held.
    pub fn one_distance_windows(&self) -> usize {
        self.windows.iter().filter(|w| w.tested && w.window.one.is_some_and(|(a, _)| a <= self.n_max) && w.one_distance_held).count()
    }

    pub fn to_check_report(&self) -> CheckReport {
        CheckReport {
            check: self.check.clone(),
            parameters: json!({
                "streams": self.streams,
                "n_max": self.n_max,
                "metrics": self.metrics,
                "depths": self.depths,
                "strict": self.strict,
                "windows": self.windows,
            }),
            verdict: self.verdict,
            counterexample: self.counterexample.clone(),
            instances: self.instances,
            notes: self.notes.clone(),
            elapsed: self.elapsed,
        }
    }
}

struct WindowRules {
    /// Upper bound on `g_N` everywhere.
    bound: usize,
    /// Assert `g_N = 2` on the two-distance windows.
    two_windows: bool,
}

fn window_check(
    name: &str,
    spec: &AlphaSpec,
    ledger: &[BigUint],
    n_max: u64,
    metrics: &[MetricSpec],
    rules: WindowRules,
    mut notes: Vec<String>,
    start: Instant,
) -> Result<WindowReport> {
    let sw = sweep(spec, ledger, n_max, metrics, 1, DepthPolicy::Auto)?;
    let mut counterexample = None;
    let mut instances = 0u64;
    let fail = |n: u64, c: usize, g: usize, lo: usize, hi: usize| Counterexample::Distances {
        alpha: sw.alpha.clone(),
        metric: metrics[c],
        index_base: 1,
        n,
        g,
        expected_min: lo,
        expected_max: hi,
    };
    'rows: for row in &sw.rows {
        let expected = row.window.filter(|w| w.predicted_g == 1 || rules.two_windows).map(|w| w.predicted_g);
        for (c, &g) in row.g.iter().enumerate() {
            instances += 1;
            let (lo, hi) = expected.map_or((1, rules.bound), |e| (e, e));
            if g < lo || g > hi {
                counterexample = Some(fail(row.n, c, g, lo, hi));
                break 'rows;
            }
        }
    }

    let windows: Vec<WindowObservation> = sw
        .windows
        .iter()
        .filter(|w| w.q < n_max)
        .map(|w| {
            let upto = w.next.min(n_max);
            let observed: BTreeMap<String, Vec<Run>> =
                metrics.iter().enumerate().map(|(c, m)| (m.label(), runs(&sw.rows, c, w.q + 1, upto))).collect();
            let one_distance_held = match w.one {
                Some((a, b)) if a <= n_max => {
                    sw.rows.iter().filter(|r| r.n >= a && r.n <= b).all(|r| r.g.iter().all(|&g| g == 1))
                }
                _ => false,
            };
            WindowObservation { window: w.clone(), tested: !w.is_empty(), clipped: w.next > n_max, observed, one_distance_held }
        })
        .collect();
    for w in windows.iter().filter(|w| !w.tested) {
        notes.push(format!("window at q = {} is empty (2q >= {}) and was not tested", w.window.q, w.window.next));
    }
    notes.push("one-distance claims for infinitely many N are checked on every predicted window meeting [1, N_max]".into());

    let verdict = match (&counterexample, instances) {
        (Some(_), _) => Verdict::Fail,
        (None, 0) => Verdict::VacuousPass,
        _ => Verdict::Pass,
    };
    Ok(WindowReport {
        check: name.into(),
        streams: spec.streams.iter().map(stream_text).collect(),
        n_max,
        metrics: metrics.to_vec(),
        depths: sw.depths.clone(),
        strict: rules.two_windows,
        windows,
        verdict,
        counterexample,
        instances,
        notes,
        sweep: Some(sw),
        elapsed: start.elapsed(),
    })
}

/// Whether every coefficient from `a_2` on is at least 2. Rule tails are
/// inspected up to `depth`.
pub fn coefficients_at_least_two(stream: &CoefficientStream, depth: usize) -> bool {
    let prefix_ok = stream.prefix().iter().skip(1).all(|&a| a >= 2);
    prefix_ok
        && match stream.tail() {
            Tail::Terminate => true,
            Tail::Periodic(p) => p.iter().all(|&a| a >= 2),
            Tail::Rule(_) => (2..=depth).all(|i| stream.coefficient(i).map_or(true, |a| a >= 2)),
        }
}

/// The pair `(alpha_1, 1 - alpha_1)` for all `N <= n_max`: always
/// `1 <= g_N <= 3`; with every coefficient from `a_2` on at least 2, also
/// `g_N <= 2`, `g_N = 2` on `q+1..=2q` and `g_N = 1` on `2q+1..=q'` for
/// consecutive shared denominators `q < q'`.
pub fn check_theorem1(alpha1: &CoefficientStream, n_max: u64, metrics: &[MetricSpec]) -> Result<WindowReport> {
    let start = Instant::now();
    if alpha1.a0() != 0 || alpha1.coefficient(1) != Some(1) {
        return Err(Error::Precondition(format!("alpha_1 must be [0; 1, ...], got {alpha1}")));
    }
    let bound = BigUint::from(n_max) * BigUint::from(n_max);
    let depth = cf::depth_exceeding(alpha1, &bound) + 4;
    let tuple = simple_pair(alpha1, depth)?;
    let spec = AlphaSpec::from_tuple(&tuple);
    let strict = coefficients_at_least_two(alpha1, depth);
    let mut notes = Vec::new();
    if !strict {
        notes.push("some coefficient beyond a_1 is 1: only 1 <= g_N <= 3 is asserted".into());
    }
    let rules = WindowRules { bound: if strict { 2 } else { 3 }, two_windows: strict };
    let mut report = window_check("theorem1", &spec, &tuple.ledger_denominators(), n_max, metrics, rules, notes, start)?;
    if !strict {
        report.windows.iter_mut().for_each(|w| w.tested = false);
    }
    Ok(report)
}

/// One-distance windows of a constructed tuple: `g_N = 1` on `2q+1..=next`
/// for every shared denominator `q`.
pub fn check_construction_windows(tuple: &ConstructedTuple, n_max: u64, metrics: &[MetricSpec]) -> Result<WindowReport> {
    let start = Instant::now();
    let spec = AlphaSpec::from_tuple(tuple);
    let rules = WindowRules { bound: usize::MAX, two_windows: false };
    let notes = vec![format!("{:?} construction: only the one-distance windows are asserted", tuple.kind)];
    window_check("construction_windows", &spec, &tuple.ledger_denominators(), n_max, metrics, rules, notes, start)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionObservation {
    pub l: usize,
    pub b: u64,
    /// Solved coefficient `a_{k_{l+1}}` of `alpha_1`.
    pub a: u64,
    /// `a / 2b > 2`.
    pub side_condition: bool,
    pub alpha1_q: u64,
    pub next: u64,
    /// `N` in `alpha1_q+1..=min(next, N_max)` with `g_N = 1` under every metric.
    pub one_distance: Vec<u64>,
}

/// Empirical test of the `b q` extension: after each extension step, look for
/// `N` between `q_{k_{l+1}}(alpha_1)` and the next denominator at which every
/// metric sees a single nearest-neighbor distance. Steps satisfying the side
/// condition that show no such `N` are failures.
pub fn check_extension(tuple: &ConstructedTuple, n_max: u64, metrics: &[MetricSpec]) -> Result<(CheckReport, Vec<ExtensionObservation>)> {
    let start = Instant::now();
    if tuple.kind != ConstructionKind::Extended {
        return Err(Error::Precondition("an extended construction is required".into()));
    }
    let spec = AlphaSpec::from_tuple(tuple);
    let sw = sweep(&spec, &[], n_max, metrics, 1, DepthPolicy::Auto)?;
    let mut observations = Vec::new();
    let mut counterexample = None;
    let mut instances = 0;
    let mut notes = vec!["empirical: outcomes are observations, not proofs".to_string()];
    for (step, ext) in tuple.extension.iter().enumerate() {
        let Some(q) = to_u64(&ext.alpha1_q) else { continue };
        if q >= n_max {
            notes.push(format!("step {} starts beyond N_max", ext.l));
            continue;
        }
        let next = next_denominator(&tuple.streams[0], &ext.alpha1_q).and_then(|n| to_u64(&n)).unwrap_or(u64::MAX);
        let a = tuple.solved_coefficients.get(step).map_or(0, |s| s.value);
        let side_condition = a > 4 * ext.b;
        let upto = next.min(n_max);
        let one_distance: Vec<u64> =
            sw.rows.iter().filter(|r| r.n > q && r.n <= upto && r.g.iter().all(|&g| g == 1)).map(|r| r.n).collect();
        instances += 1;
        if side_condition && one_distance.is_empty() && counterexample.is_none() {
            counterexample = Some(Counterexample::NoOneDistance {
                alpha: sw.alpha.clone(),
                metrics: metrics.to_vec(),
                from: q + 1,
                to: upto,
            });
        }
        observations.push(ExtensionObservation { l: ext.l, b: ext.b, a, side_condition, alpha1_q: q, next, one_distance });
    }
    let params = json!({ "streams": spec.streams.iter().map(stream_text).collect::<Vec<_>>(), "n_max": n_max, "metrics": metrics, "depths": sw.depths });
    Ok((CheckReport::finish("extension", params, instances, counterexample, notes, start), observations))
}

// ---------------------------------------------------------------------------
// smallest norms

/// The alternating chain at level `i`: `q_{i+1}`, then `j q_i` and
/// `q_{i+1} - j q_i` for `j = 1..=a_{i+1}`.
pub fn chain_indices(q_prev: u64, q_i: u64, q_next: u64, a: u64) -> Vec<u64> {
    let mut out = vec![q_next];
    for j in 1..=a {
        out.push(j * q_i);
        out.push(q_next - j * q_i);
    }
    if q_prev == q_i {
        out.pop();
    }
    out
}

struct Residues {
    p: u128,
    q: u128,
}

impl Residues {
    fn norm(&self, n: u64) -> u128 {
        let r = (n as u128 % self.q) * self.p % self.q;
        r.min(self.q - r)
    }
}

/// For every level `i <= i_max` with `q_{i+1} <= n_cap`: the alternating chain
/// of torus norms is strictly increasing, and its members inside
/// `q_i..=q_{i+1}` are exactly the `2 a_{i+1}` smallest norms there.
///
/// Level 1 is degenerate when `a_1 = 1` (`q_0 = q_1`, so chain members
/// coincide) and is skipped with a note.
pub fn check_asmallest(stream: &CoefficientStream, i_max: usize, n_cap: u64) -> Result<CheckReport> {
    let start = Instant::now();
    let params = json!({ "stream": stream_text(stream), "i_max": i_max, "n_cap": n_cap });
    let qs = cf::denominators(stream, (i_max + 1).min(stream.len().unwrap_or(usize::MAX)))?;
    let mut notes = Vec::new();

    let top = qs.iter().filter_map(to_u64).filter(|&q| q <= n_cap).max().unwrap_or(1);
    let bound = BigUint::from(top) * BigUint::from(top) * 4u32;
    let depth = cf::depth_exceeding(stream, &bound) + 2;
    let alpha = cf::value_of(stream, stream.len().map_or(depth, |n| depth.min(n)))?;
    let (p, q) = alpha.fract().to_biguint_parts().expect("non-negative");
    let (Some(p), Some(q)) = (p.to_u128(), q.to_u128()) else {
        return Err(Error::Precondition("realized alpha does not fit 128-bit residues; lower n_cap".into()));
    };
    if q.checked_mul(u128::from(top) + 1).is_none() || q > u128::MAX >> 2 {
        return Err(Error::Precondition("realized alpha does not fit 128-bit residues; lower n_cap".into()));
    }
    let res = Residues { p, q };

    let mut instances = 0;
    let mut counterexample = None;
    'levels: for i in 1..=i_max {
        let last_level = stream.len().is_some_and(|len| i + 1 >= len);
        let (Some(a), Some(q_next), false) = (stream.coefficient(i + 1), qs.get(i + 1), last_level) else {
            notes.push(format!("level {i}: stream ends, nothing to check"));
            break;
        };
        let (Some(q_prev), Some(q_i), Some(q_next)) = (to_u64(&qs[i - 1]), to_u64(&qs[i]), to_u64(q_next)) else {
            break;
        };
        if q_next > n_cap {
            notes.push(format!("level {i}: q_{} = {q_next} exceeds n_cap", i + 1));
            break;
        }
        if q_prev == q_i {
            notes.push(format!("level {i}: q_{} = q_{i}, chain degenerates", i - 1));
            continue;
        }
        instances += 1;
        let chain = chain_indices(q_prev, q_i, q_next, a);
        for w in chain.windows(2) {
            if res.norm(w[0]) >= res.norm(w[1]) {
                counterexample = Some(Counterexample::Chain { alpha: alpha.clone(), level: i, left: w[0], right: w[1] });
                break 'levels;
            }
        }
        let members: Vec<u64> = chain.iter().copied().filter(|&n| n >= q_i && n <= q_next).collect();
        if members.len() as u64 != 2 * a {
            return Err(Error::Invariant(format!("level {i}: {} chain members in range, expected {}", members.len(), 2 * a)));
        }
        let (largest, largest_norm) =
            members.iter().map(|&n| (n, res.norm(n))).max_by_key(|&(_, v)| v).expect("nonempty chain");
        let mut sorted = members.clone();
        sorted.sort_unstable();
        for n in q_i..=q_next {
            if sorted.binary_search(&n).is_err() && res.norm(n) <= largest_norm {
                counterexample = Some(Counterexample::Smallest { alpha: alpha.clone(), level: i, n, largest });
                break 'levels;
            }
        }
    }
    Ok(CheckReport::finish("asmallest", params, instances, counterexample, notes, start))
}

// ---------------------------------------------------------------------------
// kissing bounds

/// `sigma_d + 1` for the Euclidean metric, known for `d <= 3`.
pub fn kissing_bound(dimension: usize) -> Option<usize> {
    match dimension {
        1 => Some(3),
        2 => Some(5),
        3 => Some(13),
        _ => None,
    }
}

/// Every logged Euclidean maximum respects the kissing bound of its
/// dimension.
pub fn check_upper_bounds(log: &[LogEntry]) -> Result<CheckReport> {
    let start = Instant::now();
    let mut instances = 0;
    let mut counterexample = None;
    let mut notes = Vec::new();
    for e in log.iter().filter(|e| e.metric == MetricSpec::L2) {
        let Some(bound) = kissing_bound(e.dimension) else {
            notes.push(format!("{}: no bound recorded for d = {}", e.source, e.dimension));
            continue;
        };
        instances += 1;
        if e.max_g > bound && counterexample.is_none() {
            counterexample = Some(Counterexample::Distances {
                alpha: e.alpha.clone(),
                metric: MetricSpec::L2,
                index_base: e.index_base,
                n: e.at_n,
                g: e.max_g,
                expected_min: 1,
                expected_max: bound,
            });
        }
    }
    let params = json!({ "entries": log.len() });
    Ok(CheckReport::finish("upper_bounds", params, instances, counterexample, notes, start))
}

// ---------------------------------------------------------------------------

/// Recomputes a counterexample from scratch with the brute-force routines.
/// `Ok(true)` means the failure is confirmed.
pub fn recheck_counterexample(c: &Counterexample) -> Result<bool> {
    match c {
        Counterexample::ThreeGap { alpha, n, .. } => {
            let g = circle_gaps(std::slice::from_ref(alpha), *n, 1)?;
            Ok(g.distinct() > 3 || g.sum() != ExactRational::one())
        }
        Counterexample::ShiftedNeighbor { alpha, metric, n, k, .. } => {
            let h1 = |n| -> Result<u64> { Ok(nn::nearest_neighbor(&nn::generate(alpha, n, 1)?, 1, *metric)?.h) };
            let shifted = nn::nearest_neighbor(&nn::generate(alpha, n + k, 1)?, 1 + k, *metric)?.h;
            Ok(h1(n + k)? == h1(*n)? && shifted != h1(*n)?)
        }
        Counterexample::FirstNeighbor { alpha, metric, q, .. } => {
            Ok(nn::nearest_neighbor(&nn::generate(alpha, q + 1, 1)?, 1, *metric)?.h != *q)
        }
        Counterexample::Distances { alpha, metric, index_base, n, expected_min, expected_max, .. } => {
            let g = nn::gap_spectrum(&nn::generate(alpha, *n, *index_base)?, *metric)?.g();
            Ok(g < *expected_min || g > *expected_max)
        }
        Counterexample::Chain { alpha, left, right, .. } => {
            let norm = |n: u64| crate::metric::coord_norm(&(ExactRational::from_integer(n) * alpha.clone()));
            Ok(norm(*left) >= norm(*right))
        }
        Counterexample::Smallest { alpha, n, largest, .. } => {
            let norm = |n: u64| crate::metric::coord_norm(&(ExactRational::from_integer(n) * alpha.clone()));
            Ok(norm(*n) <= norm(*largest))
        }
        Counterexample::NoOneDistance { alpha, metrics, from, to } => {
            for n in *from..=*to {
                let ps = nn::generate(alpha, n, 1)?;
                let mut one = true;
                for &m in metrics {
                    if nn::gap_spectrum(&ps, m)?.g() != 1 {
                        one = false;
                        break;
                    }
                }
                if one {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{construct_3d, ConstructionSchedule};
    use proptest::prelude::*;

    const METRICS: [MetricSpec; 3] = [MetricSpec::L1, MetricSpec::L2, MetricSpec::LINF];

    fn s(text: &str) -> CoefficientStream {
        text.parse().unwrap()
    }

    fn r(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d)
    }

    #[test]
    fn three_gap_examples() {
        assert_eq!(check_three_gap(&s("0;2,(1)"), 500).unwrap().verdict, Verdict::Pass);
        assert_eq!(check_three_gap(&s("0;4"), 20).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn shifted_neighbor_examples() {
        let rep = check_lemma_part1(&[r(3, 11)], 30, MetricSpec::L2).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(rep.instances > 0);
        let g = cf::value_of(&s("0;2,(1)"), 30).unwrap();
        let rep = check_lemma_part1(&[g.clone(), ExactRational::one() - g], 200, MetricSpec::L2).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(check_lemma_part1(&[r(1, 3)], 2, MetricSpec::L1).unwrap().verdict, Verdict::VacuousPass);
    }

    #[test]
    fn shifted_neighbor_direct_and_table_agree() {
        let a = cf::value_of(&s("0;1,(2)"), 30).unwrap();
        let alpha = [a.clone(), ExactRational::one() - a];
        let direct = check_lemma_part1(&alpha, DIRECT_SCAN_LIMIT, MetricSpec::LINF).unwrap();
        let fast = check_lemma_part1(&alpha, DIRECT_SCAN_LIMIT + 1, MetricSpec::LINF).unwrap();
        assert!(direct.passed() && fast.passed());
        assert!(fast.instances >= direct.instances);
    }

    #[test]
    fn first_neighbor_on_silver_pair() {
        let t = simple_pair(&s("0;1,(2)"), 6).unwrap();
        let rep = check_lemma_part2(&t, &METRICS, 20).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.parameters["ledger"], json!([3, 7, 17]));
        assert_eq!(rep.instances, 9);
    }

    #[test]
    fn first_neighbor_vacuous_and_3d() {
        let t = simple_pair(&s("0;1,(2)"), 1).unwrap();
        assert!(t.ledger.is_empty());
        assert_eq!(check_lemma_part2(&t, &METRICS, 100).unwrap().verdict, Verdict::VacuousPass);
        let t3 = construct_3d(&s("0;1,(2)"), &ConstructionSchedule::new(vec![2, 4, 6])).unwrap();
        assert_eq!(check_lemma_part2(&t3, &METRICS, 10_000).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn windows_partition_the_range() {
        let t = simple_pair(&s("0;1,3,(2,3)"), 12).unwrap();
        let w = predicted_windows(&AlphaSpec::from_tuple(&t), &t.ledger_denominators());
        assert!(w.len() > 4);
        for win in &w {
            let (a, b) = win.one.unwrap();
            assert_eq!(win.two.0, win.q + 1);
            assert_eq!(win.two.1 + 1, a);
            assert_eq!(b, win.next);
        }
        for pair in w.windows(2) {
            assert_eq!(pair[0].next, pair[1].q);
        }
    }

    #[test]
    fn theorem1_golden_only_bound() {
        let rep = check_theorem1(&s("0;(1)"), 300, &METRICS).unwrap();
        assert!(!rep.strict);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert!(check_theorem1(&s("0;2,(1)"), 10, &METRICS).is_err());
    }

    #[test]
    fn theorem1_silver_observed_windows() {
        // the two-distance window closes one step early: g_{2q} = 1
        let rep = check_theorem1(&s("0;1,(2)"), 200, &METRICS).unwrap();
        assert!(rep.strict);
        assert_eq!(rep.verdict, Verdict::Fail);
        let Some(c @ Counterexample::Distances { n: 6, g: 1, expected_min: 2, .. }) = &rep.counterexample else {
            panic!("unexpected counterexample {:?}", rep.counterexample);
        };
        assert!(recheck_counterexample(c).unwrap());
        for w in rep.windows.iter().filter(|w| !w.clipped) {
            let q = w.window.q;
            for runs in w.observed.values() {
                assert_eq!(runs, &vec![Run { from: q + 1, to: 2 * q - 1, g: 2 }, Run { from: 2 * q, to: w.window.next, g: 1 }]);
            }
            assert!(w.one_distance_held);
        }
    }

    #[test]
    fn three_dimensional_windows() {
        let t3 = construct_3d(&s("0;1,(2)"), &ConstructionSchedule::new(vec![2, 4, 6])).unwrap();
        let rep = check_construction_windows(&t3, 2000, &METRICS).unwrap();
        assert!(rep.passed(), "{:?}", rep.counterexample);
        assert!(rep.one_distance_windows() >= 2);
    }

    #[test]
    fn asmallest_examples() {
        let golden = check_asmallest(&s("0;(1)"), 10, 1_000_000).unwrap();
        assert_eq!(golden.verdict, Verdict::Pass);
        assert_eq!(chain_indices(2, 3, 5, 1).len(), 3);
        let silver = check_asmallest(&s("0;1,(2)"), 6, 1_000_000).unwrap();
        assert_eq!(silver.verdict, Verdict::Pass);
        assert_eq!(silver.instances, 5);
        assert_eq!(check_asmallest(&s("0;3,2"), 4, 1000).unwrap().verdict, Verdict::VacuousPass);
    }

    #[test]
    fn bounds_from_sweeps() {
        assert_eq!(check_upper_bounds(&[]).unwrap().verdict, Verdict::VacuousPass);
        let t = simple_pair(&s("0;1,(2)"), 10).unwrap();
        let sw = sweep(&AlphaSpec::from_tuple(&t), &t.ledger_denominators(), 300, &METRICS, 1, DepthPolicy::Auto).unwrap();
        let log = sw.log_entries("silver");
        assert_eq!(log.len(), 3);
        assert_eq!(check_upper_bounds(&log).unwrap().verdict, Verdict::Pass);
        let mut bad = log[1].clone();
        bad.max_g = 6;
        let rep = check_upper_bounds(&[bad]).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        // fabricated entry: brute force does not confirm it
        assert!(!recheck_counterexample(rep.counterexample.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn sweep_csv_shape() {
        let spec = AlphaSpec::new(vec![s("0;1,(2)")]);
        let sw = sweep(&spec, &[], 20, &[MetricSpec::L1, MetricSpec::LINF], 1, DepthPolicy::Auto).unwrap();
        let csv = sw.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("N,g_L1,g_Linf,h1,window"));
        assert_eq!(lines.next(), Some("2,1,1,1,"));
        assert_eq!(csv.lines().count(), 20);
    }

    #[test]
    fn counterexample_json_round_trip() {
        let c = Counterexample::Chain { alpha: r(5, 13), level: 2, left: 3, right: 5 };
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains(r#""kind":"chain""#));
        assert_eq!(serde_json::from_str::<Counterexample>(&text).unwrap(), c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn base_zero_shifts_by_one(prefix in prop::collection::vec(1u64..5, 1..5), period in 1u64..4) {
            let spec = AlphaSpec::new(vec![CoefficientStream::periodic(prefix, vec![period]).unwrap()]);
            let m = [MetricSpec::L2];
            let zero = sweep(&spec, &[], 60, &m, 0, DepthPolicy::Auto).unwrap();
            let one = sweep(&spec, &[], 61, &m, 1, DepthPolicy::Auto).unwrap();
            let g0: Vec<usize> = zero.rows.iter().map(|r| r.g[0]).collect();
            let g1: Vec<usize> = one.rows.iter().map(|r| r.g[0]).collect();
            prop_assert_eq!(g0, g1);
        }

        #[test]
        fn sweep_is_depth_invariant(prefix in prop::collection::vec(1u64..5, 1..5), period in 1u64..4) {
            let spec = AlphaSpec::new(vec![CoefficientStream::periodic(prefix, vec![period]).unwrap()]);
            let a = sweep(&spec, &[], 80, &METRICS, 1, DepthPolicy::Auto).unwrap();
            let deeper = spec.deepen(&a.depths, 4);
            let b = sweep(&spec, &[], 80, &METRICS, 1, DepthPolicy::Fixed(deeper[0])).unwrap();
            prop_assert_eq!(a.rows, b.rows);
        }
    }
}
