use super::{bregman_local, RegularizerSpec};
use crate::error::{Error, Result};
use crate::game::{GameTree, Player, SequenceFormStrategy};
use crate::scalar::{dot, Scalar};

/// ψ^{Π_i}(μ) = Σ_{s ∈ S_i} μ(σ(s)) ψ^Δ_s(π(·|s)).
pub fn dilated_psi<T: Scalar>(tree: &GameTree<T>, mu: &SequenceFormStrategy<T>, spec: &RegularizerSpec<T>) -> T {
    tree.player_infosets[mu.player.index()]
        .iter()
        .map(|&s| {
            let w = mu.parent_reach(s);
            if w > T::zero() {
                w * spec.local(s).value(&mu.behavioral(s))
            } else {
                T::zero()
            }
        })
        .sum()
}

/// Gradient of the dilated regularizer with respect to μ(s, a); requires μ(σ(s)) > 0 everywhere.
pub fn dilated_psi_grad<T: Scalar>(
    tree: &GameTree<T>,
    mu: &SequenceFormStrategy<T>,
    spec: &RegularizerSpec<T>,
) -> Result<Vec<Vec<T>>> {
    let mut grad: Vec<Vec<T>> = vec![Vec::new(); tree.num_infosets()];
    let infosets = &tree.player_infosets[mu.player.index()];
    for &s in infosets {
        if !(mu.parent_reach(s) > T::zero()) {
            return Err(Error::Domain(format!("zero reach into infoset {s}")));
        }
        let pi = mu.behavioral(s);
        let local = spec.local(s);
        grad[s] = super::local_psi_grad(&local, &pi)?;
    }
    // Each child infoset also depends on its parent sequence through the dilation weight.
    for &s in infosets {
        if let Some(seq) = tree.infosets[s].parent_sequence {
            let pi = mu.behavioral(s);
            let local = spec.local(s);
            let g = local.gradient_unchecked(&pi);
            grad[seq.infoset][seq.action] += local.value(&pi) - dot(&g, &pi);
        }
    }
    Ok(grad)
}

/// Σ_{h∈s} μ_c(h) μ_opp(σ_opp(h)) for every infoset of the opponent of `opponent.player`.
pub fn bidilated_weights<T: Scalar>(tree: &GameTree<T>, opponent: &SequenceFormStrategy<T>) -> Vec<T> {
    let chance = tree.chance_reach();
    let q = opponent.player.index();
    let mut out = vec![T::zero(); tree.num_infosets()];
    for &s in &tree.player_infosets[opponent.player.opponent().index()] {
        out[s] = tree.infosets[s]
            .members
            .iter()
            .map(|&h| chance[h] * opponent.of(tree.nodes[h].sequences[q]))
            .sum();
    }
    out
}

/// ψ^{Π_p}_bi = Σ_{s∈S_p} μ_p(σ(s)) (Σ_{h∈s} μ_c(h) μ_{-p}(σ_{-p}(h))) ψ^Δ_s(π_p(·|s)).
pub fn bidilated_psi<T: Scalar>(
    tree: &GameTree<T>,
    mu1: &SequenceFormStrategy<T>,
    mu2: &SequenceFormStrategy<T>,
    player: Player,
    spec: &RegularizerSpec<T>,
) -> T {
    let (own, opp) = match player {
        Player::One => (mu1, mu2),
        Player::Two => (mu2, mu1),
    };
    let weights = bidilated_weights(tree, opp);
    tree.player_infosets[player.index()]
        .iter()
        .map(|&s| {
            let w = own.parent_reach(s) * weights[s];
            if w > T::zero() {
                w * spec.local(s).value(&own.behavioral(s))
            } else {
                T::zero()
            }
        })
        .sum()
}

fn check_same_player<T>(mu: &SequenceFormStrategy<T>, mu_ref: &SequenceFormStrategy<T>) -> Result<()> {
    if mu.player != mu_ref.player {
        return Err(Error::DimensionMismatch("sequence-form strategies of different players".into()));
    }
    Ok(())
}

/// D_{ψ^Π}(μ, μ̃) via the tree decomposition Σ_s μ(σ(s)) D_s(π(·|s), π̃(·|s)).
pub fn bregman_tree<T: Scalar>(
    tree: &GameTree<T>,
    mu: &SequenceFormStrategy<T>,
    mu_ref: &SequenceFormStrategy<T>,
    spec: &RegularizerSpec<T>,
) -> Result<T> {
    check_same_player(mu, mu_ref)?;
    let mut total = T::zero();
    for &s in &tree.player_infosets[mu.player.index()] {
        if !(mu_ref.parent_reach(s) > T::zero()) {
            return Err(Error::Domain(format!("reference has zero reach into infoset {s}")));
        }
        let w = mu.parent_reach(s);
        if w > T::zero() {
            total += w * bregman_local(&spec.local(s), &mu.behavioral(s), &mu_ref.behavioral(s))?;
        }
    }
    Ok(total)
}

/// D_{ψ^Π}(μ, μ̃) = ψ(μ) − ψ(μ̃) − ⟨∇ψ(μ̃), μ − μ̃⟩ evaluated on the sequence form directly.
pub fn bregman_tree_direct<T: Scalar>(
    tree: &GameTree<T>,
    mu: &SequenceFormStrategy<T>,
    mu_ref: &SequenceFormStrategy<T>,
    spec: &RegularizerSpec<T>,
) -> Result<T> {
    check_same_player(mu, mu_ref)?;
    let grad = dilated_psi_grad(tree, mu_ref, spec)?;
    let mut inner = T::zero();
    for &s in &tree.player_infosets[mu.player.index()] {
        for (a, &g) in grad[s].iter().enumerate() {
            inner += g * (mu.reach[s][a] - mu_ref.reach[s][a]);
        }
    }
    Ok(dilated_psi(tree, mu, spec) - dilated_psi(tree, mu_ref, spec) - inner)
}
