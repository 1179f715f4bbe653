use anyhow::{bail, Context, Result};

use kronecker_gaps::cf::{self, CoefficientStream};
use kronecker_gaps::construction::ConstructionSchedule;
use kronecker_gaps::metric::MetricSpec;
use kronecker_gaps::truncation::DepthPolicy;
use kronecker_gaps::ExactRational;

pub fn parse_stream(text: &str) -> Result<CoefficientStream> {
    text.parse::<CoefficientStream>().with_context(|| format!("invalid stream {text:?}"))
}

/// A stream, or a rational `p/q` in `(0, 1)` turned into its terminating
/// expansion.
pub fn parse_alpha(text: &str) -> Result<CoefficientStream> {
    if text.contains('/') {
        let x: ExactRational = text.trim().parse().with_context(|| format!("invalid rational {text:?}"))?;
        return cf::rational_to_cf(&x).with_context(|| format!("rational {text:?}"));
    }
    parse_stream(text)
}

/// Comma-separated list of positive integers and `inf`.
pub fn parse_metrics(text: &str) -> Result<Vec<MetricSpec>> {
    let mut out: Vec<MetricSpec> = Vec::new();
    for (i, part) in text.split(',').enumerate() {
        let m: MetricSpec = part.trim().parse().with_context(|| format!("--metrics field {}: {part:?}", i + 1))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("--metrics is empty");
    }
    Ok(out)
}

pub fn parse_depth(text: &str) -> Result<DepthPolicy> {
    match text.trim() {
        "auto" => Ok(DepthPolicy::Auto),
        k => Ok(DepthPolicy::Fixed(k.parse().with_context(|| format!("--depth must be \"auto\" or an integer, got {k:?}"))?)),
    }
}

/// Inline JSON (starting with `{`) or a path to a JSON file.
pub fn parse_schedule(arg: &str) -> Result<ConstructionSchedule> {
    let (text, origin) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), "inline schedule".to_string())
    } else {
        (std::fs::read_to_string(arg).with_context(|| format!("reading schedule {arg}"))?, arg.to_string())
    };
    let schedule: ConstructionSchedule = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("{origin}: line {}, column {}: {e}", e.line(), e.column()))?;
    schedule.validate().with_context(|| origin.clone())?;
    Ok(schedule)
}
