//! Exact best responses, exploitability, the regularized-perturbed gap and reference solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{to_sequence_form, BehavioralProfile, GameTree, NodeKind, Player};
use crate::regularizers::{argmax_regularized, bregman_tree, PerturbedSimplex, RegularizerSpec};
use crate::scalar::Scalar;
use crate::solvers::{qfr_full_step, SolverParams, SolverState};
use crate::values::FeedbackKind;

const FEASIBILITY_TOL: f64 = 1e-9;

/// Optimal (possibly regularized) response of one player.
#[derive(Clone, Debug, PartialEq)]
pub struct Response<T> {
    pub player: Player,
    /// Objective value in the responder's orientation.
    pub value: T,
    /// Responder's strategy per infoset; empty rows at the other player's infosets.
    pub policy: Vec<Vec<T>>,
}

/// Backward induction over the responder's infosets.
///
/// Maximizes u_p − τψ_bi(own) + τψ_bi(opponent) over the responder's perturbed sets.
/// The opponent's bidilated term is linear in the responder's sequence form and is
/// folded into per-sequence payoffs; the responder's own term becomes a local weight
/// τ · (chance and opponent reach of s).
fn solve_response<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    player: Player,
    tau: T,
    spec: &RegularizerSpec<T>,
    simplices: &[PerturbedSimplex<T>],
) -> Result<Response<T>> {
    profile.check_dims(tree)?;
    if simplices.len() != tree.num_infosets() || spec.alpha.len() != tree.num_infosets() {
        return Err(Error::DimensionMismatch("regularizer or simplices sized for a different tree".into()));
    }
    let me = player.index();
    let opp = player.opponent().index();
    let sign = player.sign::<T>();

    // Chance times opponent reach at every node.
    let mut ext = vec![T::one(); tree.num_nodes()];
    for (h, node) in tree.nodes.iter().enumerate() {
        for (a, e) in node.actions.iter().enumerate() {
            let factor = match node.kind {
                NodeKind::Chance => e.prob.unwrap_or_else(T::zero),
                NodeKind::Decision(p) if p.index() == opp => profile.get(node.infoset.expect("decision infoset"))[a],
                _ => T::one(),
            };
            ext[e.child] = ext[h] * factor;
        }
    }

    let mut root = T::zero();
    let mut payoff: Vec<Vec<T>> = tree.infosets.iter().map(|i| vec![T::zero(); i.num_actions()]).collect();
    let mut local_weight = vec![T::zero(); tree.num_infosets()];
    for (h, node) in tree.nodes.iter().enumerate() {
        let contribution = match node.kind {
            NodeKind::Terminal => sign * node.utility_p1.unwrap_or_else(T::zero),
            NodeKind::Decision(p) if p.index() == opp && tau != T::zero() => {
                let s = node.infoset.expect("decision infoset");
                tau * spec.local(s).value(profile.get(s))
            }
            NodeKind::Decision(_) => {
                let s = node.infoset.expect("decision infoset");
                local_weight[s] += ext[h];
                continue;
            }
            NodeKind::Chance => continue,
        };
        let w = ext[h] * contribution;
        match node.sequences[me] {
            Some(q) => payoff[q.infoset][q.action] += w,
            None => root += w,
        }
    }

    let mut value = vec![T::zero(); tree.num_infosets()];
    let mut policy: Vec<Vec<T>> = vec![Vec::new(); tree.num_infosets()];
    for &s in tree.player_infosets[me].iter().rev() {
        let info = &tree.infosets[s];
        let q: Vec<T> = payoff[s]
            .iter()
            .zip(&info.children)
            .map(|(&g, kids)| g + kids.iter().map(|&c| value[c]).sum::<T>())
            .collect();
        let tau0 = tau * local_weight[s];
        let x = argmax_regularized(&q, tau0, spec.alpha[s], spec.family, &simplices[s])?;
        let linear: T = q.iter().zip(&x).map(|(&a, &b)| a * b).sum();
        value[s] = if tau0 > T::zero() {
            linear - tau0 * spec.local(s).value(&x)
        } else {
            linear
        };
        policy[s] = x;
    }
    let total = root
        + tree.player_infosets[me]
            .iter()
            .filter(|&&s| tree.infosets[s].parent_sequence.is_none())
            .map(|&s| value[s])
            .sum::<T>();
    Ok(Response {
        player,
        value: total,
        policy,
    })
}

fn unconstrained<T: Scalar>(tree: &GameTree<T>) -> (RegularizerSpec<T>, Vec<PerturbedSimplex<T>>) {
    let spec = RegularizerSpec::uniform(crate::regularizers::Family::Euclidean, tree.num_infosets());
    let simplices = tree
        .infosets
        .iter()
        .map(|i| PerturbedSimplex::unconstrained(i.num_actions()))
        .collect();
    (spec, simplices)
}

/// Exact best response of `player` against the other player's part of `profile`; ties go to the lowest action.
pub fn best_response<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>, player: Player) -> Result<Response<T>> {
    let (spec, simplices) = unconstrained(tree);
    solve_response(tree, profile, player, T::zero(), &spec, &simplices)
}

/// max_{μ̂₁} μ̂₁ᵀAμ₂ − min_{μ̂₂} μ₁ᵀAμ̂₂.
pub fn exploitability<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>) -> Result<T> {
    let v1 = best_response(tree, profile, Player::One)?.value;
    let v2 = best_response(tree, profile, Player::Two)?.value;
    Ok(v1 + v2)
}

/// Per-player best-response values (each in its own orientation).
pub fn best_response_values<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>) -> Result<[T; 2]> {
    Ok([
        best_response(tree, profile, Player::One)?.value,
        best_response(tree, profile, Player::Two)?.value,
    ])
}

fn check_feasible<T: Scalar>(profile: &BehavioralProfile<T>, simplices: &[PerturbedSimplex<T>]) -> Result<()> {
    for (s, (x, simplex)) in profile.strategy.iter().zip(simplices).enumerate() {
        if !simplex.contains(x, FEASIBILITY_TOL) {
            return Err(Error::Domain(format!("strategy at infoset {s} is outside its perturbed simplex")));
        }
    }
    Ok(())
}

/// Duality gap of the regularized, perturbed saddle-point objective
/// μ₁ᵀAμ₂ − τψ_bi^{Π₁} + τψ_bi^{Π₂} over the perturbed strategy sets.
pub fn perturbed_regularized_gap<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    tau: T,
    spec: &RegularizerSpec<T>,
    simplices: &[PerturbedSimplex<T>],
) -> Result<T> {
    profile.check_dims(tree)?;
    if simplices.len() != tree.num_infosets() {
        return Err(Error::DimensionMismatch("simplices sized for a different tree".into()));
    }
    check_feasible(profile, simplices)?;
    let v1 = solve_response(tree, profile, Player::One, tau, spec, simplices)?.value;
    let v2 = solve_response(tree, profile, Player::Two, tau, spec, simplices)?.value;
    Ok(v1 + v2)
}

/// Settings of the long-run solve behind [`compute_reference`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceConfig {
    pub eta: f64,
    pub max_iterations: usize,
    pub check_every: usize,
    pub tol: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            eta: 0.5,
            max_iterations: 1_000_000,
            check_every: 1000,
            tol: 1e-11,
        }
    }
}

/// The regularized-perturbed equilibrium, by full-information QFR with Q-value feedback
/// until the gap drops to `config.tol`.
pub fn compute_reference<T: Scalar>(
    tree: &GameTree<T>,
    tau: T,
    spec: &RegularizerSpec<T>,
    simplices: &[PerturbedSimplex<T>],
    config: &ReferenceConfig,
) -> Result<BehavioralProfile<T>> {
    if !(tau > T::zero()) {
        return Err(Error::Precondition("reference needs tau > 0".into()));
    }
    let mut params = SolverParams::new(tree, FeedbackKind::QValue, spec.family)
        .with_tau(tau)
        .with_uniform_eta(T::lit(config.eta));
    params.spec = spec.clone();
    params.simplices = simplices.to_vec();
    let mut state = SolverState::new(tree, &params)?;
    let every = config.check_every.max(1);
    let mut best = f64::INFINITY;
    let mut best_profile = state.current.clone();
    while state.iteration < config.max_iterations {
        for _ in 0..every {
            qfr_full_step(&mut state, tree, &params)?;
        }
        let gap = perturbed_regularized_gap(tree, &state.current, tau, spec, simplices)?.as_f64();
        if gap < best {
            best = gap;
            best_profile = state.current.clone();
        }
        if gap <= config.tol {
            return Ok(best_profile);
        }
    }
    Err(Error::BudgetExhausted {
        iterations: state.iteration,
        best_gap: best,
    })
}

/// Σ_p D_{ψ^Π}(μ_p^ref, μ_p) with the tree decomposition.
pub fn bregman_to_reference<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    reference: &BehavioralProfile<T>,
    spec: &RegularizerSpec<T>,
) -> Result<T> {
    let mut total = T::zero();
    for p in Player::BOTH {
        let mu_ref = to_sequence_form(tree, reference, p)?;
        let mu = to_sequence_form(tree, profile, p)?;
        total += bregman_tree(tree, &mu_ref, &mu, spec)?;
    }
    Ok(total)
}

/// One evaluated checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub iteration: usize,
    pub exploitability_last: f64,
    pub exploitability_avg: Option<f64>,
    pub reg_gap: Option<f64>,
    pub bregman_ref: Option<f64>,
    pub best_response_values: [f64; 2],
}
