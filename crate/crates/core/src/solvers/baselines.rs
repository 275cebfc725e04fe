use rand::Rng;

use super::{SolverParams, SolverState};
use crate::error::Result;
use crate::game::{GameTree, NodeKind, Player};
use crate::regularizers::{project_truncated_simplex, prox};
use crate::scalar::Scalar;
use crate::values::{compute_feedback, compute_feedback_with, sample_trajectory_with, Augmentation, FeedbackKind};

/// Distribution proportional to the positive parts of `regrets`; uniform when none is positive.
pub fn regret_matching<T: Scalar>(regrets: &[T]) -> Vec<T> {
    let total: T = regrets.iter().map(|&r| r.max(T::zero())).sum();
    if total > T::zero() {
        regrets.iter().map(|&r| r.max(T::zero()) / total).collect()
    } else {
        vec![T::one() / T::from_usize_lossy(regrets.len()); regrets.len()]
    }
}

fn counterfactual_values<T: Scalar>(state: &SolverState<T>, tree: &GameTree<T>) -> Result<Vec<Vec<T>>> {
    let spec = crate::regularizers::RegularizerSpec::uniform(crate::regularizers::Family::Entropy, tree.num_infosets());
    Ok(compute_feedback(tree, &state.current, FeedbackKind::CounterfactualValue, T::zero(), &spec)?.cf)
}

fn add_instant_regret<T: Scalar>(regrets: &mut [T], cf: &[T], pi: &[T]) {
    let v: T = cf.iter().zip(pi).map(|(&c, &p)| c * p).sum();
    for (r, &c) in regrets.iter_mut().zip(cf) {
        *r += c - v;
    }
}

/// Vanilla CFR: simultaneous regret-matching updates, uniformly weighted average.
pub fn cfr_step<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, _params: &SolverParams<T>) -> Result<()> {
    let cf = counterfactual_values(state, tree)?;
    state.accumulate_average(tree, T::one());
    for (s, values) in cf.iter().enumerate() {
        add_instant_regret(&mut state.regrets[s], values, &state.current.strategy[s]);
    }
    for s in 0..tree.num_infosets() {
        state.current.strategy[s] = regret_matching(&state.regrets[s]);
    }
    state.center = state.current.clone();
    state.iteration += 1;
    Ok(())
}

/// CFR+: alternating updates, regrets clipped at zero, average weighted by t.
pub fn cfr_plus_step<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, _params: &SolverParams<T>) -> Result<()> {
    let t = state.iteration + 1;
    for p in Player::BOTH {
        let cf = counterfactual_values(state, tree)?;
        for &s in &tree.player_infosets[p.index()] {
            add_instant_regret(&mut state.regrets[s], &cf[s], &state.current.strategy[s]);
            for r in state.regrets[s].iter_mut() {
                *r = r.max(T::zero());
            }
            state.current.strategy[s] = regret_matching(&state.regrets[s]);
        }
    }
    state.accumulate_average(tree, T::from_usize_lossy(t));
    state.center = state.current.clone();
    state.iteration = t;
    Ok(())
}

/// Outcome-sampling MCCFR with an ε-uniform mix at every decision node.
///
/// Both players' visited infosets are updated from the same sampled play.
pub fn os_mccfr_step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SolverState<T>,
    tree: &GameTree<T>,
    params: &SolverParams<T>,
    rng: &mut R,
) -> Result<()> {
    let eps = params.explore;
    let current = &state.current;
    let mix = |s: usize| -> Vec<T> {
        let pi = current.get(s);
        let u = T::one() / T::from_usize_lossy(pi.len());
        pi.iter().map(|&x| eps * u + (T::one() - eps) * x).collect()
    };
    let trajectory = sample_trajectory_with(tree, rng, mix);

    // Per-step probabilities under the played profile and under the sampling profile.
    let k = trajectory.steps.len();
    let mut play = Vec::with_capacity(k);
    let mut sample = Vec::with_capacity(k);
    for step in &trajectory.steps {
        let node = &tree.nodes[step.node];
        match node.kind {
            NodeKind::Decision(_) => {
                let s = step.infoset.expect("decision infoset");
                let pi = state.current.get(s)[step.action];
                let u = T::one() / T::from_usize_lossy(node.actions.len());
                play.push(pi);
                sample.push(eps * u + (T::one() - eps) * pi);
            }
            _ => {
                let c = node.actions[step.action].prob.unwrap_or_else(T::zero);
                play.push(c);
                sample.push(c);
            }
        }
    }
    let q_terminal = sample.iter().fold(T::one(), |acc, &x| acc * x);
    let mut tail = vec![T::one(); k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] * play[i];
    }

    let mut reach = [T::one(); 2];
    let mut external = [T::one(); 2];
    let mut q_prefix = T::one();
    let mut updates = Vec::new();
    for (i, step) in trajectory.steps.iter().enumerate() {
        if let (Some(p), Some(s)) = (step.player, step.infoset) {
            let idx = p.index();
            let pi = state.current.get(s).to_vec();
            let u = trajectory.utility[idx];
            // ṽ(a*) = π_{-p}(h) π(h·a* → z) u / q(z)
            let v_taken = external[idx] * tail[i + 1] * u / q_terminal;
            let baseline = pi[step.action] * v_taken;
            let mut delta: Vec<T> = vec![-baseline; pi.len()];
            delta[step.action] += v_taken;
            let avg_weight = reach[idx] / q_prefix;
            updates.push((s, delta, avg_weight, pi));
            reach[idx] *= play[i];
            external[p.opponent().index()] *= play[i];
        } else {
            external[0] *= play[i];
            external[1] *= play[i];
        }
        q_prefix *= sample[i];
    }

    if params.track_average {
        for (s, _, w, pi) in &updates {
            for (acc, &x) in state.average[*s].iter_mut().zip(pi) {
                *acc += *w * x;
            }
        }
    }
    for (s, delta, _, _) in updates {
        for (r, d) in state.regrets[s].iter_mut().zip(delta) {
            *r += d;
        }
        state.current.strategy[s] = regret_matching(&state.regrets[s]);
    }
    state.center = state.current.clone();
    state.iteration += 1;
    Ok(())
}

/// Projected gradient ascent on the feedback: π ← Proj(π + η_s q(s, ·)).
pub fn pga_step<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, params: &SolverParams<T>) -> Result<()> {
    let t = state.iteration + 1;
    let fb = compute_feedback(tree, &state.current, params.kind, params.tau_at(t), &params.spec)?;
    if params.track_average {
        state.accumulate_average(tree, T::one());
    }
    for s in 0..tree.num_infosets() {
        let eta = params.eta[s];
        let z: Vec<T> = state.current.get(s).iter().zip(&fb.q[s]).map(|(&x, &q)| x + eta * q).collect();
        state.current.strategy[s] = project_truncated_simplex(&z, &params.simplices[s])?;
    }
    state.center = state.current.clone();
    state.last_m = Some(fb.m);
    state.iteration = t;
    Ok(())
}

/// Non-optimistic single prox step: π ← prox(π, −q, τ₀, η_s).
pub fn mmd_step<T: Scalar>(state: &mut SolverState<T>, tree: &GameTree<T>, params: &SolverParams<T>) -> Result<()> {
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
        let g: Vec<T> = fb.q[s].iter().map(|&v| -v).collect();
        state.current.strategy[s] = prox(
            params.spec.family,
            state.current.get(s),
            &g,
            tau0,
            params.eta[s],
            params.spec.alpha[s],
            &params.simplices[s],
        )?;
    }
    state.center = state.current.clone();
    state.last_m = Some(fb.m);
    state.iteration = t;
    Ok(())
}
