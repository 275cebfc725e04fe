use std::path::PathBuf;

use qfr::game::{build_kuhn, build_leduc, load_game, GameTree};
use qfr::regularizers::Family;
use qfr::solvers::{lr_schedule, Algorithm, Anneal, NuChoice, Schedule, SolverParams};
use qfr::values::FeedbackKind;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};

/// One experiment: a solver configuration repeated over consecutive seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `kuhn`, `leduc` or a path to a JSON game.
    pub game: String,
    pub algo: Algorithm,
    pub feedback: FeedbackKind,
    pub reg: Family,
    /// η₀.
    pub eta: f64,
    #[serde(with = "schedule_text")]
    pub schedule: Schedule,
    pub tau: f64,
    /// γ₀; the floors are γ₀ν_s.
    pub gamma: f64,
    pub nu: NuChoice,
    pub iters: usize,
    pub eval_every: usize,
    /// Explicit evaluation iterations; replaces `eval_every` when set.
    pub checkpoints: Option<Vec<usize>>,
    pub seed: u64,
    pub reps: usize,
    pub out: Option<PathBuf>,
    /// Exploration rate of outcome-sampling MCCFR.
    pub explore: f64,
    pub anneal: Option<Anneal>,
    /// Compute the regularized equilibrium and report the Bregman distance to it.
    pub reference: bool,
    pub reference_tol: f64,
    pub reference_max_iters: usize,
    /// Record wall-clock milliseconds; off makes the CSV reproducible byte for byte.
    pub wall: bool,
    /// Check the multipliers m_s against [M₁, M₂].
    pub monitor: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            game: "kuhn".into(),
            algo: Algorithm::Qfr,
            feedback: FeedbackKind::QValue,
            reg: Family::Entropy,
            eta: 0.1,
            schedule: Schedule::Uniform,
            tau: 0.0,
            gamma: 0.0,
            nu: NuChoice::Leaves,
            iters: 1000,
            eval_every: 100,
            checkpoints: None,
            seed: 0,
            reps: 1,
            out: None,
            explore: 0.1,
            anneal: None,
            reference: false,
            reference_tol: 1e-11,
            reference_max_iters: 1_000_000,
            wall: true,
            monitor: true,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::Config("iters must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval-every must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if let Some(points) = &self.checkpoints {
            if points.is_empty() || points.windows(2).any(|w| w[0] >= w[1]) || points[0] == 0 {
                return Err(Error::Config("checkpoints must be positive and strictly increasing".into()));
            }
            if *points.last().unwrap() > self.iters {
                return Err(Error::Config("checkpoint beyond the iteration budget".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.reference && !(self.tau > 0.0) {
            return Err(Error::Config("the reference solution needs tau > 0".into()));
        }
        Ok(())
    }

    /// Whether `t` is an evaluated iteration.
    pub fn is_checkpoint(&self, t: usize) -> bool {
        match &self.checkpoints {
            Some(points) => points.binary_search(&t).is_ok(),
            None => t % self.eval_every == 0 || t == self.iters,
        }
    }

    /// Whether the perturbed-regularized gap is reported; the regret-matching baselines
    /// leave the perturbed sets and are skipped.
    pub fn tracks_gap(&self) -> bool {
        !matches!(self.algo, Algorithm::Cfr | Algorithm::CfrPlus | Algorithm::OsMccfr)
    }

    pub fn solver_params(&self, tree: &GameTree<f64>) -> Result<SolverParams<f64>> {
        let eta = lr_schedule(tree, self.schedule, self.eta)?;
        Ok(SolverParams::new(tree, self.feedback, self.reg)
            .with_tau(self.tau)
            .with_eta(eta)
            .with_perturbation(tree, self.gamma, self.nu)?
            .with_anneal(self.anneal)
            .with_explore(self.explore)
            .with_average(self.algo.keeps_average()))
    }
}

/// `kuhn`, `leduc`, or a JSON game file.
pub fn load_tree(game: &str) -> Result<GameTree<f64>> {
    match game {
        "kuhn" => Ok(build_kuhn()),
        "leduc" => Ok(build_leduc()),
        path => Ok(load_game(&read_file(path.as_ref())?)?),
    }
}

mod schedule_text {
    use qfr::solvers::Schedule;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(schedule: &Schedule, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(schedule)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Schedule, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
