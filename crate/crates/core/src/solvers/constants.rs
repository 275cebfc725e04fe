use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{exploration_distribution, gamma_lower_bound, GameTree};
use crate::regularizers::{Family, RegularizerSpec};
use crate::scalar::Scalar;
use crate::values::FeedbackKind;

/// Inputs of the constants calculator.
#[derive(Clone, Debug)]
pub struct ConstantsConfig {
    pub kind: FeedbackKind,
    pub family: Family,
    /// α_s per infoset; empty means 1 everywhere.
    pub alpha: Vec<f64>,
    pub tau: f64,
    pub gamma0: f64,
    /// Floors are γ₀ν_s; `None` uses the leaf-count exploration distribution.
    pub nu: Option<Vec<Vec<f64>>>,
    /// Feedback comes from single sampled trajectories.
    pub outcome_sampling: bool,
    /// Horizon T and failure probability δ for the high-probability constants.
    pub horizon: usize,
    pub delta: f64,
}

impl ConstantsConfig {
    pub fn new(kind: FeedbackKind, family: Family, tau: f64, gamma0: f64) -> Self {
        ConstantsConfig {
            kind,
            family,
            alpha: Vec::new(),
            tau,
            gamma0,
            nu: None,
            outcome_sampling: false,
            horizon: 100_000,
            delta: 0.05,
        }
    }
}

/// Game-dependent constants of the convergence analysis.
#[derive(Clone, Debug, Serialize)]
pub struct GameConstants {
    pub kind: FeedbackKind,
    pub family: String,
    pub tau: f64,
    pub gamma0: f64,
    /// γ = γ₀^D / |S|.
    pub gamma: f64,
    /// D: largest number of own infosets on a root path.
    pub depth: usize,
    pub num_infosets: usize,
    pub m1: f64,
    pub m2: f64,
    /// Largest local regularizer value over the simplex, without α.
    pub psi_max: f64,
    /// The alternative Euclidean figure 1/(2 min|A_s|), kept for comparison.
    pub psi_max_alt: f64,
    pub q_bound: f64,
    /// Σ_{h∈s} μ_c(h).
    pub chance_mass: Vec<f64>,
    pub c_diff: Vec<f64>,
    /// Entropy C^diff with coefficient ‖q‖ instead of 2‖q‖.
    pub c_diff_alt: Vec<f64>,
    pub k: f64,
    pub c_minus: Vec<f64>,
    pub c_ratio: Vec<f64>,
    /// Infinite when C^− is zero.
    pub c_eta: Vec<f64>,
    pub c_eta_horizon: Vec<f64>,
    pub c_visit: f64,
    pub alpha: Vec<f64>,
    pub num_actions: Vec<usize>,
}

impl GameConstants {
    /// log T + log|S| + log(1/δ).
    fn log_factor(horizon: usize, num_infosets: usize, delta: f64) -> f64 {
        (horizon.max(1) as f64).ln() + (num_infosets.max(1) as f64).ln() + (1.0 / delta).ln()
    }
}

/// Evaluates every constant for `tree` under `config`.
pub fn game_constants<T: Scalar>(tree: &GameTree<T>, config: &ConstantsConfig) -> Result<GameConstants> {
    let n = tree.num_infosets();
    if n == 0 {
        return Err(Error::InvalidParameter("game has no infosets".into()));
    }
    if !(config.gamma0 >= 0.0 && config.gamma0 <= 1.0) {
        return Err(Error::InvalidParameter("gamma0 must lie in [0, 1]".into()));
    }
    if !(config.tau >= 0.0) {
        return Err(Error::InvalidParameter("tau must be nonnegative".into()));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
    }
    let alpha = if config.alpha.is_empty() { vec![1.0; n] } else { config.alpha.clone() };
    RegularizerSpec::<f64>::new(config.family, alpha.clone())?;
    if alpha.len() != n {
        return Err(Error::DimensionMismatch(format!("{} alphas for {n} infosets", alpha.len())));
    }
    let nu: Vec<Vec<f64>> = match &config.nu {
        Some(v) => v.clone(),
        None => exploration_distribution(tree)
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.as_f64()).collect())
            .collect(),
    };

    let tau = config.tau;
    let gamma = gamma_lower_bound(&tree.cast::<f64>(), config.gamma0);
    let depth = tree.max_own_depth();
    let chance_mass: Vec<f64> = tree.chance_mass().into_iter().map(|x| x.as_f64()).collect();
    let min_chance = chance_mass.iter().copied().fold(f64::INFINITY, f64::min);
    let max_chance = chance_mass.iter().copied().fold(0.0, f64::max);
    let num_actions: Vec<usize> = tree.infosets.iter().map(|i| i.num_actions()).collect();
    let min_actions = *num_actions.iter().min().unwrap_or(&1);
    let max_actions = *num_actions.iter().max().unwrap_or(&1);

    let (m1, m2) = match config.kind {
        FeedbackKind::CounterfactualValue => (1.0, 1.0),
        FeedbackKind::QValue => (gamma * min_chance, max_chance),
        FeedbackKind::TrajectoryQValue => (1.0, 1.0 / gamma),
    };
    let (psi_max, psi_max_alt) = match config.family {
        Family::Entropy => ((max_actions as f64).ln(), (max_actions as f64).ln()),
        Family::Euclidean => (0.5, 0.5 / min_actions as f64),
    };
    // τ = 0 zeroes every τ term, even where γ = 0 makes its factor infinite.
    let tau_over_m1 = if tau == 0.0 { 0.0 } else { tau / m1 };
    let alpha_max = alpha.iter().copied().fold(0.0, f64::max);
    let mut q_bound = tau_over_m1 * alpha_max * depth as f64 * psi_max + 1.0;
    if config.outcome_sampling {
        let min_floor = nu
            .iter()
            .flatten()
            .map(|&v| config.gamma0 * v)
            .fold(f64::INFINITY, f64::min);
        q_bound /= min_floor;
    }

    let reg_log = if tau == 0.0 { 0.0 } else { tau_over_m1 * (1.0 / gamma).ln() };
    let mut c_diff = Vec::with_capacity(n);
    let mut c_diff_alt = Vec::with_capacity(n);
    for s in 0..n {
        let a = alpha[s];
        let reg = a * reg_log;
        match config.family {
            Family::Entropy => {
                c_diff.push((2.0 / a) * (2.0 * q_bound + reg));
                c_diff_alt.push((2.0 / a) * (q_bound + reg));
            }
            Family::Euclidean => {
                let k = num_actions[s] as f64;
                let v = (k / a) * q_bound + 2.0 * k.sqrt() * tau_over_m1;
                c_diff.push(v);
                c_diff_alt.push(v);
            }
        }
    }
    let k = (0..n)
        .map(|s| 2.0 * q_bound / alpha[s] + reg_log)
        .fold(0.0, f64::max);
    let max_c_diff = c_diff.iter().copied().fold(0.0, f64::max);

    let mut c_minus = Vec::with_capacity(n);
    let mut c_ratio = Vec::with_capacity(n);
    for info in &tree.infosets {
        let size = info.members.len() as f64;
        let (minus, ratio) = match (config.kind, config.family) {
            (FeedbackKind::CounterfactualValue, _) => (0.0, 0.0),
            (FeedbackKind::TrajectoryQValue, Family::Euclidean) => {
                (6.0 / (gamma * gamma) * max_c_diff, 6.0 / (gamma * gamma * m1) * max_c_diff)
            }
            (FeedbackKind::TrajectoryQValue, Family::Entropy) => (12.0 * k / gamma, 12.0 * k),
            (FeedbackKind::QValue, Family::Euclidean) => (6.0 * size * max_c_diff, 6.0 * size / m1 * max_c_diff),
            (FeedbackKind::QValue, Family::Entropy) => (12.0 * m2 * k, 12.0 * k),
        };
        c_minus.push(minus);
        c_ratio.push(ratio);
    }

    let log_factor = GameConstants::log_factor(config.horizon, n, config.delta);
    let c_eta = (0..n)
        .map(|s| {
            if c_minus[s] == 0.0 {
                f64::INFINITY
            } else {
                gamma * chance_mass[s] / (2.0 * c_minus[s])
            }
        })
        .collect();
    let c_eta_horizon = (0..n)
        .map(|s| {
            if c_minus[s] == 0.0 {
                f64::INFINITY
            } else {
                gamma * gamma * chance_mass[s] / (2.0 * c_minus[s] * log_factor)
            }
        })
        .collect();
    let c_visit = log_factor / (gamma * gamma * min_chance);

    Ok(GameConstants {
        kind: config.kind,
        family: config.family.to_string(),
        tau,
        gamma0: config.gamma0,
        gamma,
        depth,
        num_infosets: n,
        m1,
        m2,
        psi_max,
        psi_max_alt,
        q_bound,
        chance_mass,
        c_diff,
        c_diff_alt,
        k,
        c_minus,
        c_ratio,
        c_eta,
        c_eta_horizon,
        c_visit,
        alpha,
        num_actions,
    })
}
