use std::fmt::Write as _;
use std::path::Path;

use qfr::eval::{best_response, exploitability};
use qfr::game::{BehavioralProfile, GameTree, Player};
use qfr::regularizers::Family;
use qfr::solvers::{check_conditions, game_constants, lr_schedule, ConditionReport, ConstantsConfig, GameConstants, Schedule};
use qfr::values::FeedbackKind;
use serde::{Deserialize, Serialize};

use crate::config::load_tree;
use crate::error::{read_json, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsRequest {
    pub game: String,
    pub feedback: FeedbackKind,
    pub reg: Family,
    pub tau: f64,
    pub gamma: f64,
    pub eta: f64,
    pub schedule: Schedule,
    pub outcome_sampling: bool,
    pub horizon: usize,
    pub delta: f64,
}

impl Default for ConstantsRequest {
    fn default() -> Self {
        ConstantsRequest {
            game: "kuhn".into(),
            feedback: FeedbackKind::TrajectoryQValue,
            reg: Family::Entropy,
            tau: 0.0,
            gamma: 0.0,
            eta: 0.1,
            schedule: Schedule::Uniform,
            outcome_sampling: false,
            horizon: 100_000,
            delta: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub game: String,
    pub eta: Vec<f64>,
    pub constants: GameConstants,
    pub conditions: ConditionReport,
}

pub fn constants(request: &ConstantsRequest) -> Result<ConstantsReport> {
    let tree = load_tree(&request.game)?;
    constants_on(&tree, request)
}

pub fn constants_on(tree: &GameTree<f64>, request: &ConstantsRequest) -> Result<ConstantsReport> {
    let mut config = ConstantsConfig::new(request.feedback, request.reg, request.tau, request.gamma);
    config.outcome_sampling = request.outcome_sampling;
    config.horizon = request.horizon;
    config.delta = request.delta;
    let constants = game_constants(tree, &config)?;
    let eta = lr_schedule(tree, request.schedule, request.eta)?;
    let conditions = check_conditions(tree, &eta, &constants)?;
    Ok(ConstantsReport {
        game: tree.name.clone(),
        eta,
        constants,
        conditions,
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

impl ConstantsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let c = &self.constants;
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "game            {}", self.game).unwrap();
        writeln!(w, "feedback        {}", c.kind).unwrap();
        writeln!(w, "regularizer     {}", c.family).unwrap();
        writeln!(w, "tau             {}", c.tau).unwrap();
        writeln!(w, "gamma0          {}", c.gamma0).unwrap();
        writeln!(w, "gamma           {:e}", c.gamma).unwrap();
        writeln!(w, "depth D         {}", c.depth).unwrap();
        writeln!(w, "infosets        {}", c.num_infosets).unwrap();
        writeln!(w, "M1              {}", c.m1).unwrap();
        writeln!(w, "M2              {}", c.m2).unwrap();
        writeln!(w, "psi_max         {} (alt {})", c.psi_max, c.psi_max_alt).unwrap();
        writeln!(w, "|q|_inf bound   {}", c.q_bound).unwrap();
        writeln!(w, "K               {}", c.k).unwrap();
        writeln!(w, "C_visit         {}", c.c_visit).unwrap();
        writeln!(w).unwrap();
        writeln!(w, "{:>4} {:>3} {:>10} {:>12} {:>12} {:>12} {:>12}  A  B  C  stab", "s", "|A|", "eta", "mu_c mass", "C_diff", "C_minus", "C_eta").unwrap();
        for (s, cond) in self.conditions.infosets.iter().enumerate() {
            writeln!(
                w,
                "{:>4} {:>3} {:>10.3e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}  {}  {}  {}  {}",
                s,
                c.num_actions[s],
                cond.eta,
                c.chance_mass[s],
                c.c_diff[s],
                c.c_minus[s],
                c.c_eta[s],
                cond.a as u8,
                cond.b as u8,
                cond.c as u8,
                cond.stability as u8
            )
            .unwrap();
        }
        let r = &self.conditions;
        writeln!(w).unwrap();
        writeln!(w, "condition A     {} ({} violations)", mark(r.violations_a == 0), r.violations_a).unwrap();
        writeln!(w, "condition B     {} ({} violations)", mark(r.violations_b == 0), r.violations_b).unwrap();
        writeln!(w, "condition C     {} ({} violations)", mark(r.violations_c == 0), r.violations_c).unwrap();
        writeln!(w, "stability       {} ({} violations)", mark(r.violations_stability == 0), r.violations_stability).unwrap();
        out
    }
}

/// Profile file: per-infoset behavioral strategies in tree infoset order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    pub strategy: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfosetPolicy {
    pub infoset: usize,
    pub actions: Vec<String>,
    pub strategy: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BestResponseReport {
    pub player: u8,
    pub value: f64,
    pub exploitability: f64,
    pub policy: Vec<InfosetPolicy>,
}

pub fn bestresp(game: &str, profile: &Path, player: u8) -> Result<BestResponseReport> {
    let tree = load_tree(game)?;
    let file: ProfileFile = read_json(profile)?;
    bestresp_on(&tree, &BehavioralProfile::from_vecs(file.strategy), player)
}

pub fn bestresp_on(tree: &GameTree<f64>, profile: &BehavioralProfile<f64>, player: u8) -> Result<BestResponseReport> {
    let p = match player {
        1 => Player::One,
        2 => Player::Two,
        other => return Err(Error::Config(format!("player must be 1 or 2, got {other}"))),
    };
    profile.validate(tree)?;
    let response = best_response(tree, profile, p)?;
    let policy = tree.player_infosets[p.index()]
        .iter()
        .map(|&s| InfosetPolicy {
            infoset: s,
            actions: tree.infosets[s].actions.clone(),
            strategy: response.policy[s].clone(),
        })
        .collect();
    Ok(BestResponseReport {
        player,
        value: response.value,
        exploitability: exploitability(tree, profile)?,
        policy,
    })
}
