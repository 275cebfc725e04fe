//! Iterative solvers: QFR (full information, stochastic, lazy), PGA and the baselines.

mod baselines;
mod constants;
mod monitor;
mod qfr;
mod schedule;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{exploration_distribution, BehavioralProfile, GameTree};
use crate::regularizers::{project_truncated_simplex, Family, PerturbedSimplex, RegularizerSpec};
use crate::scalar::Scalar;
use crate::values::{Augmentation, FeedbackKind};

pub use baselines::{cfr_plus_step, cfr_step, mmd_step, os_mccfr_step, pga_step, regret_matching};
pub use constants::{game_constants, ConstantsConfig, GameConstants};
pub use monitor::{MBoundMonitor, MonitorSummary};
pub use qfr::{lazy_flush, lazy_qfr_eager_step, lazy_qfr_step, qfr_full_step, qfr_stochastic_step};
pub use schedule::{ancestor_learning_rate, check_conditions, infoset_levels, lr_schedule, ConditionReport, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Qfr,
    QfrStoch,
    QfrLazy,
    Pga,
    Cfr,
    #[serde(rename = "cfrplus")]
    CfrPlus,
    #[serde(rename = "osmccfr")]
    OsMccfr,
    Mmd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Qfr,
        Algorithm::QfrStoch,
        Algorithm::QfrLazy,
        Algorithm::Pga,
        Algorithm::Cfr,
        Algorithm::CfrPlus,
        Algorithm::OsMccfr,
        Algorithm::Mmd,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Qfr => "qfr",
            Algorithm::QfrStoch => "qfr-stoch",
            Algorithm::QfrLazy => "qfr-lazy",
            Algorithm::Pga => "pga",
            Algorithm::Cfr => "cfr",
            Algorithm::CfrPlus => "cfrplus",
            Algorithm::OsMccfr => "osmccfr",
            Algorithm::Mmd => "mmd",
        }
    }

    /// Whether a step consumes randomness.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Algorithm::QfrStoch | Algorithm::QfrLazy | Algorithm::OsMccfr)
    }

    /// Whether the reported average strategy is meaningful for this algorithm.
    pub fn keeps_average(self) -> bool {
        matches!(self, Algorithm::Pga | Algorithm::Cfr | Algorithm::CfrPlus | Algorithm::OsMccfr)
    }

    /// Provenance label used in reports.
    pub fn provenance(self) -> &'static str {
        match self {
            Algorithm::Mmd => "baseline (reconstructed)",
            Algorithm::Cfr | Algorithm::CfrPlus | Algorithm::OsMccfr => "baseline (standard)",
            _ => "method",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Geometric decay τ_k = τ · factor^k, applied every `every` iterations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anneal {
    pub factor: f64,
    pub every: usize,
}

#[derive(Clone, Debug)]
pub struct SolverParams<T> {
    pub kind: FeedbackKind,
    pub spec: RegularizerSpec<T>,
    pub tau: T,
    pub eta: Vec<T>,
    pub simplices: Vec<PerturbedSimplex<T>>,
    /// How the full-information QFR step folds in the regularizer.
    pub augmentation: Augmentation,
    pub anneal: Option<Anneal>,
    /// Exploration rate of outcome-sampling MCCFR.
    pub explore: T,
    /// Accumulate the reach-weighted average strategy every step.
    pub track_average: bool,
}

/// Where the per-infoset exploration distribution ν comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuChoice {
    /// Proportional to own-decision leaf counts below each action.
    Leaves,
    Uniform,
}

impl<T: Scalar> SolverParams<T> {
    /// Defaults: τ = 0, η = 0.1 everywhere, no perturbation.
    pub fn new(tree: &GameTree<T>, kind: FeedbackKind, family: Family) -> Self {
        let n = tree.num_infosets();
        SolverParams {
            kind,
            spec: RegularizerSpec::uniform(family, n),
            tau: T::zero(),
            eta: vec![T::lit(0.1); n],
            simplices: tree
                .infosets
                .iter()
                .map(|i| PerturbedSimplex::unconstrained(i.num_actions()))
                .collect(),
            augmentation: Augmentation::Bidilated,
            anneal: None,
            explore: T::lit(0.6),
            track_average: false,
        }
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_eta(mut self, eta: Vec<T>) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_uniform_eta(mut self, eta: T) -> Self {
        self.eta = vec![eta; self.eta.len()];
        self
    }

    /// Floors γ₀ν_s at every infoset.
    pub fn with_perturbation(mut self, tree: &GameTree<T>, gamma0: T, nu: NuChoice) -> Result<Self> {
        let nus = match nu {
            NuChoice::Leaves => exploration_distribution(tree),
            NuChoice::Uniform => tree
                .infosets
                .iter()
                .map(|i| vec![T::one() / T::from_usize_lossy(i.num_actions()); i.num_actions()])
                .collect(),
        };
        self.simplices = nus
            .into_iter()
            .map(|v| PerturbedSimplex::new(gamma0, v))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn with_augmentation(mut self, augmentation: Augmentation) -> Self {
        self.augmentation = augmentation;
        self
    }

    pub fn with_anneal(mut self, anneal: Option<Anneal>) -> Self {
        self.anneal = anneal;
        self
    }

    pub fn with_explore(mut self, explore: T) -> Self {
        self.explore = explore;
        self
    }

    pub fn with_average(mut self, track: bool) -> Self {
        self.track_average = track;
        self
    }

    /// τ in effect at iteration `t` (1-based) after annealing.
    pub fn tau_at(&self, t: usize) -> T {
        match self.anneal {
            Some(a) if a.every > 0 => {
                let k = (t.saturating_sub(1) / a.every) as i32;
                self.tau * T::lit(a.factor.powi(k))
            }
            _ => self.tau,
        }
    }

    pub fn validate(&self, tree: &GameTree<T>) -> Result<()> {
        let n = tree.num_infosets();
        if self.eta.len() != n || self.simplices.len() != n || self.spec.alpha.len() != n {
            return Err(Error::DimensionMismatch(format!("parameters sized for a different tree ({n} infosets)")));
        }
        if let Some(s) = self.eta.iter().position(|e| !(e.as_f64() >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative learning rate at infoset {s}")));
        }
        if !(self.tau.as_f64() >= 0.0) {
            return Err(Error::InvalidParameter("tau must be nonnegative".into()));
        }
        for (s, (simplex, info)) in self.simplices.iter().zip(&tree.infosets).enumerate() {
            if simplex.len() != info.num_actions() {
                return Err(Error::DimensionMismatch(format!("simplex at infoset {s}")));
            }
            if !(simplex.gamma.as_f64() <= 1.0) {
                return Err(Error::InvalidParameter(format!("gamma above 1 at infoset {s}")));
            }
            simplex.check()?;
        }
        let e = self.explore.as_f64();
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::InvalidParameter("exploration must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Mutable iterate of any solver.
#[derive(Clone, Debug)]
pub struct SolverState<T> {
    /// Completed steps.
    pub iteration: usize,
    /// π^{(t)}: the played strategy.
    pub current: BehavioralProfile<T>,
    /// π̄^{(t)}: the optimistic center.
    pub center: BehavioralProfile<T>,
    /// Cumulative regrets of the regret-matching baselines.
    pub regrets: Vec<Vec<T>>,
    /// Unnormalized reach-weighted strategy sums.
    pub average: Vec<Vec<T>>,
    /// Lazy variant: iteration each infoset is up to date with.
    pub stamps: Vec<usize>,
    /// Lazy variant: local regularization weight frozen at the last real update.
    pub frozen_tau0: Vec<T>,
    /// Multipliers m_s observed at the last full-information step.
    pub last_m: Option<Vec<T>>,
}

impl<T: Scalar> SolverState<T> {
    /// Uniform strategies moved into the perturbed simplices.
    pub fn new(tree: &GameTree<T>, params: &SolverParams<T>) -> Result<Self> {
        params.validate(tree)?;
        let mut strategy = Vec::with_capacity(tree.num_infosets());
        for (info, simplex) in tree.infosets.iter().zip(&params.simplices) {
            let n = info.num_actions();
            let uniform = vec![T::one() / T::from_usize_lossy(n); n];
            strategy.push(if simplex.contains(&uniform, 0.0) {
                uniform
            } else {
                project_truncated_simplex(&uniform, simplex)?
            });
        }
        let current = BehavioralProfile::from_vecs(strategy);
        let zeros: Vec<Vec<T>> = current.strategy.iter().map(|x| vec![T::zero(); x.len()]).collect();
        Ok(SolverState {
            iteration: 0,
            center: current.clone(),
            current,
            regrets: zeros.clone(),
            average: zeros,
            stamps: vec![0; tree.num_infosets()],
            frozen_tau0: Vec::new(),
            last_m: None,
        })
    }

    /// Normalized average strategy; uniform where nothing was accumulated.
    pub fn average_profile(&self) -> BehavioralProfile<T> {
        BehavioralProfile::from_vecs(
            self.average
                .iter()
                .map(|row| {
                    let total: T = row.iter().copied().sum();
                    if total > T::zero() {
                        row.iter().map(|&v| v / total).collect()
                    } else {
                        vec![T::one() / T::from_usize_lossy(row.len()); row.len()]
                    }
                })
                .collect(),
        )
    }

    /// Adds weight · μ_p(σ(s)) · π(·|s) for every infoset of both players.
    pub(crate) fn accumulate_average(&mut self, tree: &GameTree<T>, weight: T) {
        let own = own_reach_from_profile(tree, &self.current);
        for (s, row) in self.average.iter_mut().enumerate() {
            let w = weight * own[s];
            for (acc, &p) in row.iter_mut().zip(&self.current.strategy[s]) {
                *acc += w * p;
            }
        }
    }
}

/// μ_{p(s)}(σ(s)) for every infoset, walking infosets in topological order.
pub(crate) fn own_reach_from_profile<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>) -> Vec<T> {
    let mut out = vec![T::one(); tree.num_infosets()];
    for s in 0..tree.num_infosets() {
        if let Some(seq) = tree.infosets[s].parent_sequence {
            out[s] = out[seq.infoset] * profile.get(seq.infoset)[seq.action];
        }
    }
    out
}

/// One solver instance: tree, parameters, state and the selected algorithm.
pub struct Solver<'a, T> {
    pub tree: &'a GameTree<T>,
    pub params: SolverParams<T>,
    pub state: SolverState<T>,
    pub algorithm: Algorithm,
}

impl<'a, T: Scalar> Solver<'a, T> {
    pub fn new(tree: &'a GameTree<T>, params: SolverParams<T>, algorithm: Algorithm) -> Result<Self> {
        if matches!(algorithm, Algorithm::QfrStoch | Algorithm::QfrLazy)
            && params.kind != FeedbackKind::TrajectoryQValue
        {
            return Err(Error::InvalidParameter(format!(
                "{algorithm} samples trajectories and needs trajectory Q-value feedback"
            )));
        }
        let mut state = SolverState::new(tree, &params)?;
        if algorithm == Algorithm::QfrLazy {
            qfr::init_lazy(&mut state, tree, &params)?;
        }
        Ok(Solver {
            tree,
            params,
            state,
            algorithm,
        })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (tree, params, state) = (self.tree, &self.params, &mut self.state);
        match self.algorithm {
            Algorithm::Qfr => qfr_full_step(state, tree, params),
            Algorithm::QfrStoch => qfr_stochastic_step(state, tree, params, rng),
            Algorithm::QfrLazy => lazy_qfr_step(state, tree, params, rng),
            Algorithm::Pga => pga_step(state, tree, params),
            Algorithm::Cfr => cfr_step(state, tree, params),
            Algorithm::CfrPlus => cfr_plus_step(state, tree, params),
            Algorithm::OsMccfr => os_mccfr_step(state, tree, params, rng),
            Algorithm::Mmd => mmd_step(state, tree, params),
        }
    }

    /// The played strategy profile, with any postponed lazy updates applied.
    pub fn current_profile(&mut self) -> Result<BehavioralProfile<T>> {
        if self.algorithm == Algorithm::QfrLazy {
            lazy_flush(&mut self.state, self.tree, &self.params)?;
        }
        Ok(self.state.current.clone())
    }

    /// The optimistic center π̄, with any postponed lazy updates applied.
    pub fn center_profile(&mut self) -> Result<BehavioralProfile<T>> {
        if self.algorithm == Algorithm::QfrLazy {
            lazy_flush(&mut self.state, self.tree, &self.params)?;
        }
        Ok(self.state.center.clone())
    }

    pub fn average_profile(&self) -> Option<BehavioralProfile<T>> {
        self.params.track_average.then(|| self.state.average_profile())
    }
}
