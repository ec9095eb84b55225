use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use super::{Bound, PipelineResult, ResultKind, StageChain};
use crate::distribution::{format_decimal, rational_to_f64, Mode, Scalar};

/// Exact values with larger denominators are left out of JSON reports.
const JSON_MAX_BITS: u64 = 4096;

const SIGNIFICANT: i64 = 12;

/// 12 significant digits, rounded toward `+∞` when `round_up`, else toward 0,
/// so a printed lower (upper) bound is still a lower (upper) bound.
pub fn decimal_bound(value: &Scalar, round_up: bool) -> String {
    let r = match value {
        Scalar::Exact(r) => r,
        Scalar::Float(x) => return format_decimal(*x),
    };
    if r.is_zero() {
        return "0".into();
    }
    if r.is_negative() {
        return format_decimal(rational_to_f64(r));
    }
    let approx = rational_to_f64(r);
    if approx < 1e-300 {
        return if round_up { "1e-300".into() } else { "0".into() };
    }
    let mut magnitude = approx.log10().floor() as i64;
    let ten = BigInt::from(10u32);
    let below_power = |m: i64| {
        if m >= 0 {
            *r.numer() < r.denom() * ten.pow(m as u32)
        } else {
            r.numer() * ten.pow((-m) as u32) < *r.denom()
        }
    };
    if below_power(magnitude) {
        magnitude -= 1;
    }
    let decimals = (SIGNIFICANT - 1 - magnitude).max(0) as usize;
    let scaled = r.numer() * BigInt::from(10u32).pow(decimals as u32);
    let (q, rem) = scaled.div_rem(r.denom());
    let q = if round_up && !rem.is_zero() { q + 1 } else { q };
    let digits = q.to_string();
    let text = if decimals == 0 {
        digits
    } else {
        let padded = format!("{digits:0>width$}", width = decimals + 1);
        let (int, frac) = padded.split_at(padded.len() - decimals);
        format!("{int}.{frac}")
    };
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

fn show(value: &Scalar, round_up: Option<bool>) -> String {
    if let Some(t) = value.exact_text() {
        return t;
    }
    match round_up {
        Some(up) => decimal_bound(value, up),
        None => value.decimal(),
    }
}

fn value_json(value: &Scalar, round_up: Option<bool>) -> Value {
    let exact = match value {
        Scalar::Exact(r) if r.denom().bits() <= JSON_MAX_BITS => Some(r.to_string()),
        _ => None,
    };
    let decimal = match round_up {
        Some(up) => decimal_bound(value, up),
        None => value.decimal(),
    };
    json!({ "exact": exact, "decimal": decimal, "denominator_bits": value.denominator_bits() })
}

fn chain_text(chain: &StageChain) -> String {
    let Some(beta) = &chain.beta else { return "final".into() };
    let plural = if beta.iterations == 1 { "" } else { "s" };
    let mut parts = vec![format!("{} iteration{plural}", beta.iterations), beta.stopped_by.to_string()];
    if beta.rounded {
        parts.push("rounded".into());
    }
    if chain.restarted {
        parts.push("restarted".into());
    }
    if let Some(b) = chain.bound {
        parts.push(b.to_string());
    }
    parts.join(", ")
}

fn chain_json(chain: &StageChain) -> Value {
    let mut v = json!({ "role": chain.role, "restarted": chain.restarted, "bound": chain.bound });
    if let Some(beta) = &chain.beta {
        v["iterations"] = json!(beta.iterations);
        v["stopped_by"] = json!(beta.stopped_by);
        v["direction"] = json!(beta.direction);
        v["rounded"] = json!(beta.rounded);
    }
    v
}

impl PipelineResult {
    /// One-line summary of the measure.
    pub fn summary(&self) -> String {
        if let Some((lo, hi)) = &self.interval {
            if self.is_certified_exact() {
                return format!("measure = {} (exact)", show(lo, None));
            }
            return format!("measure in [{}, {}]", show(lo, Some(false)), show(hi, Some(true)));
        }
        let Some(e) = &self.estimate else { return "measure unavailable".into() };
        let bound = self.bound.unwrap_or(Bound::Mixed);
        if self.mode == Mode::Float {
            return format!("measure ~ {} (float estimate, {bound})", e.decimal());
        }
        match bound {
            Bound::Exact => format!("measure = {} (exact fixpoint)", show(e, None)),
            Bound::Lower => format!("measure >= {} (lower bound)", show(e, Some(false))),
            Bound::Upper => format!("measure <= {} (upper bound)", show(e, Some(true))),
            Bound::Mixed => format!("measure ~ {} (estimate, mixed bounds)", show(e, None)),
        }
    }

    /// Summary line followed by one line per stage.
    pub fn report_text(&self) -> String {
        let mut out = self.summary();
        out.push('\n');
        for record in &self.stages {
            let s = &record.stage;
            let chains: Vec<String> = match self.kind {
                ResultKind::Point => record.chains.iter().map(chain_text).collect(),
                ResultKind::Enclosure => record
                    .chains
                    .iter()
                    .map(|c| format!("{}: {}", serde_json::to_value(c.role).unwrap().as_str().unwrap(), chain_text(c)))
                    .collect(),
            };
            out.push_str(&format!("stage {} {:?} {}: {}\n", s.n, s.kind, s.entry, chains.join("; ")));
        }
        out
    }

    pub fn report_json(&self) -> Value {
        let stages: Vec<Value> = self
            .stages
            .iter()
            .map(|r| {
                json!({
                    "n": r.stage.n,
                    "kind": r.stage.kind,
                    "entry": r.stage.entry,
                    "chains": r.chains.iter().map(chain_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        let round = match self.bound {
            Some(Bound::Lower) => Some(false),
            Some(Bound::Upper) => Some(true),
            _ => None,
        };
        json!({
            "kind": self.kind,
            "mode": self.mode.to_string(),
            "branching": self.branching,
            "N": self.plan.top,
            "stages": stages,
            "estimate": self.estimate.as_ref().map(|e| value_json(e, round)),
            "interval": self.interval.as_ref().map(|(lo, hi)| json!({
                "lo": value_json(lo, Some(false)),
                "hi": value_json(hi, Some(true)),
            })),
            "bound": self.bound,
            "certified_exact": self.is_certified_exact(),
            "summary": self.summary(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::Exact(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn directed_decimals() {
        assert_eq!(decimal_bound(&s(1, 3), false), "0.333333333333");
        assert_eq!(decimal_bound(&s(1, 3), true), "0.333333333334");
        assert_eq!(decimal_bound(&s(1, 2), true), "0.5");
        assert_eq!(decimal_bound(&s(1, 1), false), "1");
        assert_eq!(decimal_bound(&s(0, 1), true), "0");
        assert_eq!(decimal_bound(&s(1, 3000), false), "0.000333333333333");
        let tiny = BigRational::new(BigInt::from(1), BigInt::from(1) << 2000);
        assert_eq!(decimal_bound(&Scalar::Exact(tiny.clone()), false), "0");
        let near_one = BigRational::from_integer(1.into()) - tiny;
        assert_eq!(decimal_bound(&Scalar::Exact(near_one.clone()), false), "0.999999999999");
        assert_eq!(decimal_bound(&Scalar::Exact(near_one), true), "1");
    }
}
