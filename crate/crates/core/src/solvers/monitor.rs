use serde::Serialize;

use crate::scalar::Scalar;

/// Relative slack below which an out-of-range multiplier counts as rounding, not a violation.
const SOFT_SLACK: f64 = 1e-9;

/// Tracks M₁ ≤ m_s ≤ M₂ over a run.
#[derive(Clone, Debug)]
pub struct MBoundMonitor {
    pub m1: f64,
    pub m2: f64,
    summary: MonitorSummary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonitorSummary {
    pub observations: usize,
    /// Outside [M₁, M₂] by more than the relative slack.
    pub hard: usize,
    /// Outside by at most the slack.
    pub soft: usize,
    pub min_seen: f64,
    pub max_seen: f64,
}

impl MBoundMonitor {
    pub fn new(m1: f64, m2: f64) -> Self {
        MBoundMonitor {
            m1,
            m2,
            summary: MonitorSummary {
                min_seen: f64::INFINITY,
                max_seen: f64::NEG_INFINITY,
                ..MonitorSummary::default()
            },
        }
    }

    pub fn observe<T: Scalar>(&mut self, m: &[T]) {
        for v in m.iter().map(|v| v.as_f64()) {
            let sm = &mut self.summary;
            sm.observations += 1;
            sm.min_seen = sm.min_seen.min(v);
            sm.max_seen = sm.max_seen.max(v);
            if v >= self.m1 && v <= self.m2 {
                continue;
            }
            if v >= self.m1 * (1.0 - SOFT_SLACK) && v <= self.m2 * (1.0 + SOFT_SLACK) {
                sm.soft += 1;
            } else {
                sm.hard += 1;
            }
        }
    }

    pub fn summary(&self) -> &MonitorSummary {
        &self.summary
    }

    pub fn merge(&mut self, other: &MBoundMonitor) {
        let (a, b) = (&mut self.summary, &other.summary);
        a.observations += b.observations;
        a.hard += b.hard;
        a.soft += b.soft;
        a.min_seen = a.min_seen.min(b.min_seen);
        a.max_seen = a.max_seen.max(b.max_seen);
    }
}
