//! Finite-horizon checks of weak and strong persistence.
//!
//! A property persists strongly when it eventually holds forever, and
//! weakly when it keeps coming back. A finite trace can only approximate
//! both, so the property is sampled at every record time and the last
//! `margin` seconds serve as the "future" of the latest candidate time.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::forks::heads_consistent;
use super::{MetricsError, TraceIndex};
use crate::chain::{BlockDag, BlockId, NodeId};
use crate::simnet::Trace;

/// System state handed to a property.
pub struct PropertyState<'a> {
    pub time: f64,
    /// Head of every node, honest or not.
    pub heads: &'a [BlockId],
    pub honest: &'a [bool],
    pub dag: &'a BlockDag,
}

/// A named 0/1 predicate over system states.
#[derive(Clone)]
pub struct TraceProperty {
    pub name: String,
    predicate: Arc<dyn Fn(&PropertyState<'_>) -> bool + Send + Sync>,
}

impl fmt::Debug for TraceProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceProperty").field("name", &self.name).finish()
    }
}

impl TraceProperty {
    pub fn new(name: impl Into<String>, f: impl Fn(&PropertyState<'_>) -> bool + Send + Sync + 'static) -> Self {
        TraceProperty {
            name: name.into(),
            predicate: Arc::new(f),
        }
    }

    pub fn eval(&self, s: &PropertyState<'_>) -> bool {
        (self.predicate)(s)
    }

    /// All honest heads lie on one chain.
    pub fn consistent_heads() -> Self {
        TraceProperty::new("consistent_heads", |s| {
            let heads: Vec<BlockId> = s
                .heads
                .iter()
                .zip(s.honest)
                .filter(|(_, h)| **h)
                .map(|(b, _)| *b)
                .collect();
            heads_consistent(s.dag, &heads).unwrap_or(false)
        })
    }

    /// All honest nodes share one head.
    pub fn common_head() -> Self {
        TraceProperty::new("common_head", |s| {
            let mut it = s.heads.iter().zip(s.honest).filter(|(_, h)| **h).map(|(b, _)| *b);
            let first = it.next();
            it.all(|b| Some(b) == first)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersistenceMode {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Falsified,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Falsified => "falsified",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Verdict over time-ordered samples `(t, value)`.
///
/// Candidate times are the sample times in `[warmup, horizon - margin]`.
/// Strong: holds iff the property is 1 at every sample from some candidate
/// on, falsified otherwise. Weak: holds iff the property is 1 at some
/// sample after the last candidate, inconclusive otherwise. Without
/// candidates both modes are inconclusive.
pub fn verdict_from_samples(
    samples: &[(f64, bool)],
    warmup: f64,
    horizon: f64,
    margin: f64,
    mode: PersistenceMode,
) -> Result<Verdict, MetricsError> {
    if !(margin > 0.0) {
        return Err(MetricsError::InvalidInput(format!("margin must be > 0, got {margin}")));
    }
    if !(horizon > warmup) {
        return Err(MetricsError::HorizonTooShort { horizon, warmup });
    }
    let cutoff = horizon - margin;
    let candidates = || samples.iter().filter(|(t, _)| *t >= warmup && *t <= cutoff);
    let Some(&(last_candidate, _)) = candidates().next_back() else {
        return Ok(Verdict::Inconclusive);
    };
    Ok(match mode {
        PersistenceMode::Strong => {
            let last_zero = samples.iter().rev().find(|(t, v)| *t >= warmup && !*v).map(|(t, _)| *t);
            let holds = match last_zero {
                None => true,
                Some(z) => candidates().any(|(t, _)| *t > z),
            };
            if holds {
                Verdict::Holds
            } else {
                Verdict::Falsified
            }
        }
        PersistenceMode::Weak => {
            if samples.iter().any(|(t, v)| *t > last_candidate && *v) {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            }
        }
    })
}

/// Samples `prop` after all events at `warmup`, at every later record time
/// and at the horizon.
pub fn sample_property(trace: &Trace, prop: &TraceProperty, warmup: f64) -> Result<Vec<(f64, bool)>, MetricsError> {
    let idx = TraceIndex::build(trace)?;
    let horizon = idx.horizon();
    let mut times: Vec<f64> = std::iter::once(warmup)
        .chain(
            trace
                .records
                .iter()
                .map(|r| r.t)
                .filter(|t| *t > warmup && *t <= horizon),
        )
        .chain(std::iter::once(horizon))
        .collect();
    times.dedup();
    let n = idx.node_count();
    let mut heads = vec![BlockId::GENESIS; n];
    Ok(times
        .into_iter()
        .map(|t| {
            for (i, h) in heads.iter_mut().enumerate() {
                *h = idx.head_at(NodeId(i as u32), t);
            }
            let state = PropertyState {
                time: t,
                heads: &heads,
                honest: &idx.honest,
                dag: &idx.dag,
            };
            (t, prop.eval(&state))
        })
        .collect())
}

pub fn persistence_check(
    trace: &Trace,
    prop: &TraceProperty,
    warmup: f64,
    margin: f64,
    mode: PersistenceMode,
) -> Result<Verdict, MetricsError> {
    let horizon = trace.horizon();
    if !(horizon > warmup) {
        return Err(MetricsError::HorizonTooShort { horizon, warmup });
    }
    let samples = sample_property(trace, prop, warmup)?;
    verdict_from_samples(&samples, warmup, horizon, margin, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PersistenceMode::*;

    fn s(v: &[(f64, bool)]) -> Vec<(f64, bool)> {
        v.to_vec()
    }

    #[test]
    fn settles_late() {
        // 1 from t=7 on, candidates up to 8
        let x = s(&[(0.0, true), (3.0, false), (7.0, true), (10.0, true)]);
        assert_eq!(
            verdict_from_samples(&x, 0.0, 10.0, 2.0, Strong).unwrap(),
            Verdict::Holds
        );
        assert_eq!(verdict_from_samples(&x, 0.0, 10.0, 2.0, Weak).unwrap(), Verdict::Holds);
        // candidates up to 6 cannot see it settle
        assert_eq!(
            verdict_from_samples(&x, 0.0, 10.0, 4.0, Strong).unwrap(),
            Verdict::Falsified
        );
        assert_eq!(verdict_from_samples(&x, 0.0, 10.0, 4.0, Weak).unwrap(), Verdict::Holds);
    }

    #[test]
    fn never_recurs() {
        let x = s(&[(0.0, true), (5.0, false), (10.0, false)]);
        assert_eq!(
            verdict_from_samples(&x, 0.0, 10.0, 1.0, Weak).unwrap(),
            Verdict::Inconclusive
        );
        assert_eq!(
            verdict_from_samples(&x, 0.0, 10.0, 1.0, Strong).unwrap(),
            Verdict::Falsified
        );
    }

    #[test]
    fn empty_window_and_bad_input() {
        let x = s(&[(9.5, true), (10.0, true)]);
        assert_eq!(
            verdict_from_samples(&x, 9.5, 10.0, 1.0, Strong).unwrap(),
            Verdict::Inconclusive
        );
        assert!(matches!(
            verdict_from_samples(&x, 10.0, 10.0, 1.0, Weak),
            Err(MetricsError::HorizonTooShort { .. })
        ));
        assert!(verdict_from_samples(&x, 0.0, 10.0, 0.0, Weak).is_err());
    }
}
