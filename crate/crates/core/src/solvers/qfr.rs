use rand::Rng;

use super::{own_reach_from_profile, SolverParams, SolverState};
use crate::error::{Error, Result};
use crate::game::GameTree;
use crate::regularizers::prox;
use crate::scalar::Scalar;
use crate::values::{
    compute_feedback_with, estimate_trajectory_q, estimate_trajectory_q_dilated, sample_trajectory,
    sample_trajectory_with, Augmentation, FeedbackKind, SampledFeedback,
};

/// The two coupled prox solves of one optimistic step at infoset `s`:
/// π̄ ← prox(π̄, −q, τ₀), then π ← prox(π̄_new, −q, τ₀).
fn optimistic_update<T: Scalar>(
    state: &mut SolverState<T>,
    params: &SolverParams<T>,
    s: usize,
    q: &[T],
    tau0: T,
) -> Result<()> {
    let g: Vec<T> = q.iter().map(|&v| -v).collect();
    let simplex = &params.simplices[s];
    let alpha = params.spec.alpha[s];
    let eta = params.eta[s];
    let center = prox(params.spec.family, state.center.get(s), &g, tau0, eta, alpha, simplex)?;
    let current = prox(params.spec.family, &center, &g, tau0, eta, alpha, simplex)?;
    state.center.strategy[s] = center;
    state.current.strategy[s] = current;
    Ok(())
}

/// One synchronous full-information step over every infoset.
pub fn qfr_full_step<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, params: &SolverParams<T>) -> Result<()> {
    let t = state.iteration + 1;
    let tau = params.tau_at(t);
    let fb = compute_feedback_with(tree, &state.current, params.kind, tau, &params.spec, params.augmentation)?;
    if params.track_average {
        state.accumulate_average(tree, T::one());
    }
    for s in 0..tree.num_infosets() {
        let tau0 = match params.augmentation {
            Augmentation::Bidilated => tau * fb.opp_reach[s] / fb.m[s],
            Augmentation::Dilated => tau / fb.m[s],
        };
        optimistic_update(state, params, s, &fb.q[s], tau0)?;
    }
    state.last_m = Some(fb.m);
    state.iteration = t;
    Ok(())
}

fn require_trajectory_q<T>(params: &SolverParams<T>) -> Result<()> {
    if params.kind != FeedbackKind::TrajectoryQValue {
        return Err(Error::Precondition("trajectory sampling needs trajectory Q-value feedback".into()));
    }
    Ok(())
}

fn apply_sampled<T: Scalar>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    estimate: &SampledFeedback<T>,
    tau0: impl Fn(usize) -> T,
) -> Result<()> {
    for entry in &estimate.entries {
        let s = entry.infoset;
        let q = estimate.vector(entry, tree.infosets[s].num_actions());
        optimistic_update(state, params, s, &q, tau0(s))?;
    }
    Ok(())
}

/// One sampled trajectory; only the visited infosets move, with local weight τ.
pub fn qfr_stochastic_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    rng: &mut R,
) -> Result<()> {
    require_trajectory_q(params)?;
    let t = state.iteration + 1;
    let tau = params.tau_at(t);
    let trajectory = sample_trajectory(tree, &state.current, rng);
    let estimate = estimate_trajectory_q(tree, &trajectory, &state.current, tau, &params.spec)?;
    if params.track_average {
        state.accumulate_average(tree, T::one());
    }
    apply_sampled(state, tree, params, &estimate, |_| tau)?;
    state.iteration = t;
    Ok(())
}

/// Regularizer-only optimistic step (zero value feedback).
fn idle_update<T: Scalar>(state: &mut SolverState<T>, params: &SolverParams<T>, s: usize) -> Result<()> {
    let tau0 = state.frozen_tau0[s];
    if tau0 == T::zero() {
        return Ok(());
    }
    let zeros = vec![T::zero(); params.simplices[s].len()];
    optimistic_update(state, params, s, &zeros, tau0)
}

/// Brings infoset `s` up to iteration `target` with idle steps.
fn catch_up<T: Scalar>(state: &mut SolverState<T>, params: &SolverParams<T>, s: usize, target: usize) -> Result<()> {
    while state.stamps[s] < target {
        idle_update(state, params, s)?;
        state.stamps[s] += 1;
    }
    Ok(())
}

pub(crate) fn init_lazy<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, params: &SolverParams<T>) -> Result<()> {
    require_trajectory_q(params)?;
    let own = own_reach_from_profile(tree, &state.current);
    let tau = params.tau_at(1);
    // Trajectory Q-value multiplier m_s = 1/μ_p(σ(s)), so τ/m_s = τ μ_p(σ(s)).
    state.frozen_tau0 = own.iter().map(|&r| tau * r).collect();
    state.stamps = vec![state.iteration; tree.num_infosets()];
    Ok(())
}

/// μ_{-p}(s) for an infoset, catching up every opponent infoset it reads.
fn lazy_opponent_reach<T: Scalar>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    chance: &[T],
    s: usize,
    target: usize,
) -> Result<T> {
    let opp = tree.infosets[s].player.opponent();
    let mut total = T::zero();
    for &h in &tree.infosets[s].members {
        let mut r = chance[h];
        let mut seq = tree.nodes[h].sequences[opp.index()];
        while let Some(q) = seq {
            catch_up(state, params, q.infoset, target)?;
            r *= state.current.get(q.infoset)[q.action];
            seq = tree.infosets[q.infoset].parent_sequence;
        }
        total += r;
    }
    Ok(total)
}

/// μ_p(σ(s)) from the (already current) own ancestors.
fn own_parent_reach<T: Scalar>(state: &SolverState<T>, tree: &GameTree<T>, s: usize) -> T {
    let mut r = T::one();
    let mut seq = tree.infosets[s].parent_sequence;
    while let Some(q) = seq {
        r *= state.current.get(q.infoset)[q.action];
        seq = tree.infosets[q.infoset].parent_sequence;
    }
    r
}

/// Shared body of the lazy step and its eager reference. `lazy` selects whether
/// idle infosets are caught up on touch or updated every iteration.
fn dilated_sampled_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    rng: &mut R,
    lazy: bool,
) -> Result<()> {
    require_trajectory_q(params)?;
    if state.frozen_tau0.len() != tree.num_infosets() {
        init_lazy(state, tree, params)?;
    }
    let done = state.iteration;
    let t = done + 1;
    let tau = params.tau_at(t);

    let trajectory = {
        let mut failure = None;
        let traj = sample_trajectory_with(tree, rng, |s| {
            if let Err(e) = catch_up(state, params, s, done) {
                failure.get_or_insert(e);
            }
            state.current.get(s).to_vec()
        });
        if let Some(e) = failure {
            return Err(e);
        }
        traj
    };

    let mut weights = Vec::new();
    if tau != T::zero() {
        let chance = tree.chance_reach();
        for s in trajectory.visited_infosets() {
            let w = lazy_opponent_reach(state, tree, params, &chance, s, done)?;
            weights.push((s, w));
        }
    }
    let current = &state.current;
    let estimate = estimate_trajectory_q_dilated(
        &trajectory,
        |s| current.get(s).to_vec(),
        |s| weights.iter().find(|(v, _)| *v == s).map_or_else(T::zero, |&(_, w)| w),
        tau,
        &params.spec,
    )?;
    let own: Vec<(usize, T)> = estimate
        .entries
        .iter()
        .map(|e| (e.infoset, own_parent_reach(state, tree, e.infoset)))
        .collect();
    if params.track_average {
        if lazy {
            lazy_flush(state, tree, params)?;
        }
        state.accumulate_average(tree, T::one());
    }

    if !lazy {
        for s in 0..tree.num_infosets() {
            if !own.iter().any(|&(v, _)| v == s) {
                idle_update(state, params, s)?;
            }
        }
    }
    for (entry, &(s, reach)) in estimate.entries.iter().zip(&own) {
        let tau0 = tau * reach;
        let q = estimate.vector(entry, tree.infosets[s].num_actions());
        optimistic_update(state, params, s, &q, tau0)?;
        state.frozen_tau0[s] = tau0;
    }
    if lazy {
        for &(s, _) in &own {
            state.stamps[s] = t;
        }
    } else {
        state.stamps.iter_mut().for_each(|v| *v = t);
    }
    state.iteration = t;
    Ok(())
}

/// Lazy QFR: dilated local weight τ/m_s, idle updates postponed until an infoset is touched.
pub fn lazy_qfr_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    rng: &mut R,
) -> Result<()> {
    dilated_sampled_step(state, tree, params, rng, true)
}

/// Eager reference for [`lazy_qfr_step`]: every unvisited infoset receives its idle update each iteration.
pub fn lazy_qfr_eager_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    rng: &mut R,
) -> Result<()> {
    dilated_sampled_step(state, tree, params, rng, false)
}

/// Applies every postponed idle update so that all infosets are current.
pub fn lazy_flush<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, params: &SolverParams<T>) -> Result<()> {
    if state.frozen_tau0.len() != tree.num_infosets() {
        return Ok(());
    }
    let target = state.iteration;
    for s in 0..tree.num_infosets() {
        catch_up(state, params, s, target)?;
    }
    Ok(())
}
