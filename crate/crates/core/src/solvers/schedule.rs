use serde::{Deserialize, Serialize};

use super::GameConstants;
use crate::error::{Error, Result};
use crate::game::{GameTree, Player};
use crate::scalar::Scalar;

/// Learning-rate layout over infosets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Uniform,
    /// η_s = η₀ / ratio^{L(s)} with ratio ∈ (0, 1].
    Depth(f64),
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(Schedule::Uniform);
        }
        let ratio = s
            .strip_prefix("depth:")
            .and_then(|r| r.parse::<f64>().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown schedule {s:?}")))?;
        Ok(Schedule::Depth(ratio))
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Uniform => f.write_str("uniform"),
            Schedule::Depth(r) => write!(f, "depth:{r}"),
        }
    }
}

/// L(s): length of the longest chain of ancestor infosets (either player) above `s`; 0 at roots.
pub fn infoset_levels<T: Scalar>(tree: &GameTree<T>) -> Vec<usize> {
    let mut level = vec![0usize; tree.num_infosets()];
    for s in 0..tree.num_infosets() {
        level[s] = tree
            .ancestor_infosets(s)
            .into_iter()
            .map(|a| level[a] + 1)
            .max()
            .unwrap_or(0);
    }
    level
}

pub fn lr_schedule<T: Scalar>(tree: &GameTree<T>, schedule: Schedule, eta0: T) -> Result<Vec<T>> {
    match schedule {
        Schedule::Uniform => Ok(vec![eta0; tree.num_infosets()]),
        Schedule::Depth(ratio) => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::InvalidParameter(format!("schedule ratio {ratio} outside (0, 1]")));
            }
            Ok(infoset_levels(tree)
                .into_iter()
                .map(|l| eta0 / T::lit(ratio.powi(l as i32)))
                .collect())
        }
    }
}

/// η_s^anc: the largest learning rate among infosets on either player's history at a member of `s`.
pub fn ancestor_learning_rate<T: Scalar>(tree: &GameTree<T>, eta: &[T], s: usize) -> T {
    tree.ancestor_infosets(s)
        .into_iter()
        .map(|a| eta[a])
        .fold(T::zero(), T::max)
}

/// Per-infoset outcome of the learning-rate conditions.
#[derive(Clone, Debug, Serialize)]
pub struct InfosetConditions {
    pub infoset: usize,
    pub eta: f64,
    pub eta_anc: f64,
    /// Largest Σ η over a player's history at a member.
    pub history_sum: f64,
    pub a: bool,
    pub b: bool,
    pub c: bool,
    /// η_s^anc/η_s ≤ τ C_s^η.
    pub stability: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub infosets: Vec<InfosetConditions>,
    pub violations_a: usize,
    pub violations_b: usize,
    pub violations_c: usize,
    pub violations_stability: usize,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.violations_a + self.violations_b + self.violations_c + self.violations_stability == 0
    }
}

/// Evaluates conditions A, B, C and the ancestor-ratio bound for the schedule `eta`.
pub fn check_conditions<T: Scalar>(tree: &GameTree<T>, eta: &[T], constants: &GameConstants) -> Result<ConditionReport> {
    let n = tree.num_infosets();
    if eta.len() != n || constants.num_infosets != n {
        return Err(Error::DimensionMismatch(format!("schedule or constants not sized for {n} infosets")));
    }
    let eta: Vec<f64> = eta.iter().map(|e| e.as_f64()).collect();
    let mut infosets = Vec::with_capacity(n);
    for s in 0..n {
        let mut history_sum = 0.0f64;
        for &h in &tree.infosets[s].members {
            for p in Player::BOTH {
                let total: f64 = tree.own_history(h, p).iter().map(|q| eta[q.infoset]).sum();
                history_sum = history_sum.max(total);
            }
        }
        let eta_anc = tree
            .ancestor_infosets(s)
            .into_iter()
            .map(|a| eta[a])
            .fold(0.0, f64::max);
        let reg = if constants.tau == 0.0 {
            0.0
        } else {
            constants.tau * constants.alpha[s] / constants.m1 * (1.0 / constants.gamma).ln()
        };
        let local = 2.0 * constants.q_bound + reg;
        // C^η = ∞ (no multiplier drift) satisfies the ratio bound for any τ.
        let ratio_bound = if constants.c_eta[s].is_infinite() {
            f64::INFINITY
        } else {
            constants.tau * constants.c_eta[s]
        };
        let stability = eta_anc == 0.0 || eta_anc / eta[s] <= ratio_bound;
        infosets.push(InfosetConditions {
            infoset: s,
            eta: eta[s],
            eta_anc,
            history_sum,
            a: history_sum <= eta[s],
            b: 6.0 * eta_anc * constants.k <= 1.0,
            c: eta[s] * local <= 1.0,
            stability,
        });
    }
    let count = |f: fn(&InfosetConditions) -> bool| infosets.iter().filter(|c| !f(c)).count();
    Ok(ConditionReport {
        violations_a: count(|c| c.a),
        violations_b: count(|c| c.b),
        violations_c: count(|c| c.c),
        violations_stability: count(|c| c.stability),
        infosets,
    })
}
