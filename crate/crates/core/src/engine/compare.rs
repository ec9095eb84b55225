use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{EngineError, PipelineResult};
use crate::distribution::{Mode, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Lt,
    Gt,
    Eq,
    Unknown,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "LT",
            Relation::Gt => "GT",
            Relation::Eq => "EQ",
            Relation::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub relation: Relation,
    /// Bounds on the measure the decision was based on.
    pub lo: Scalar,
    pub hi: Scalar,
}

/// Decides `measure ? q` where the result certifies it; `Unknown` otherwise.
/// Float results never certify anything.
pub fn compare(result: &PipelineResult, q: &BigRational) -> Result<Comparison, EngineError> {
    if *q < BigRational::zero() || *q > BigRational::one() {
        return Err(EngineError::ThresholdOutOfRange(q.to_string()));
    }
    let (lo, hi) = result.bounds();
    let relation = if result.mode != Mode::Exact {
        Relation::Unknown
    } else if lo.cmp_rational(q) == Ordering::Greater {
        Relation::Gt
    } else if hi.cmp_rational(q) == Ordering::Less {
        Relation::Lt
    } else if result.is_certified_exact() && lo.cmp_rational(q) == Ordering::Equal {
        Relation::Eq
    } else {
        Relation::Unknown
    };
    Ok(Comparison { relation, lo, hi })
}
