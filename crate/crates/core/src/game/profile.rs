use serde::{Deserialize, Serialize};

use super::tree::{GameTree, NodeKind, Player, Sequence};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const SIMPLEX_TOL: f64 = 1e-12;

/// Per-infoset action distributions for both players, indexed by infoset id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehavioralProfile<T> {
    pub strategy: Vec<Vec<T>>,
}

impl<T: Scalar> BehavioralProfile<T> {
    pub fn uniform(tree: &GameTree<T>) -> Self {
        let strategy = tree
            .infosets
            .iter()
            .map(|info| {
                let n = info.num_actions();
                vec![T::one() / T::from_usize_lossy(n); n]
            })
            .collect();
        BehavioralProfile { strategy }
    }

    pub fn from_vecs(strategy: Vec<Vec<T>>) -> Self {
        BehavioralProfile { strategy }
    }

    #[inline]
    pub fn get(&self, s: usize) -> &[T] {
        &self.strategy[s]
    }

    #[inline]
    pub fn get_mut(&mut self, s: usize) -> &mut [T] {
        &mut self.strategy[s]
    }

    /// Checks dimensions and that every vector is a distribution (to 1e-12).
    pub fn validate(&self, tree: &GameTree<T>) -> Result<()> {
        self.check_dims(tree)?;
        for (s, x) in self.strategy.iter().enumerate() {
            let total: f64 = x.iter().map(|v| v.as_f64()).sum();
            let tol = SIMPLEX_TOL.max(x.len() as f64 * T::epsilon().as_f64() * 4.0);
            if x.iter().any(|v| !(v.as_f64() >= 0.0)) || (total - 1.0).abs() > tol {
                return Err(Error::Domain(format!("strategy at infoset {s} is not a distribution: {x:?}")));
            }
        }
        Ok(())
    }

    pub fn check_dims(&self, tree: &GameTree<T>) -> Result<()> {
        if self.strategy.len() != tree.num_infosets() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} infosets, tree has {}",
                self.strategy.len(),
                tree.num_infosets()
            )));
        }
        for (s, (x, info)) in self.strategy.iter().zip(&tree.infosets).enumerate() {
            if x.len() != info.num_actions() {
                return Err(Error::DimensionMismatch(format!(
                    "infoset {s}: {} probabilities for {} actions",
                    x.len(),
                    info.num_actions()
                )));
            }
        }
        Ok(())
    }

    /// Smallest action probability across all infosets.
    pub fn min_probability(&self) -> T {
        self.strategy
            .iter()
            .flat_map(|x| x.iter().copied())
            .fold(T::infinity(), T::min)
    }
}

/// Sequence-form strategy μ_i of one player: μ_i(s, a) for the player's infosets, μ_i(∅) = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceFormStrategy<T> {
    pub player: Player,
    /// Indexed by infoset id; empty for the opponent's infosets.
    pub reach: Vec<Vec<T>>,
    parent: Vec<Option<Sequence>>,
}

impl<T: Scalar> SequenceFormStrategy<T> {
    #[inline]
    pub fn get(&self, seq: Sequence) -> T {
        self.reach[seq.infoset][seq.action]
    }

    /// μ(σ), with the empty sequence mapping to 1.
    #[inline]
    pub fn of(&self, seq: Option<Sequence>) -> T {
        seq.map_or_else(T::one, |q| self.get(q))
    }

    /// μ(σ(s)) for an infoset of this player.
    #[inline]
    pub fn parent_reach(&self, s: usize) -> T {
        self.of(self.parent[s])
    }

    /// Behavioral strategy at `s` recovered by normalization; uniform where μ(σ(s)) = 0.
    pub fn behavioral(&self, s: usize) -> Vec<T> {
        let row = &self.reach[s];
        let total: T = row.iter().copied().sum();
        if total > T::zero() {
            row.iter().map(|&v| v / total).collect()
        } else {
            vec![T::one() / T::from_usize_lossy(row.len()); row.len()]
        }
    }
}

/// μ_i(s, a) = μ_i(σ(s)) · π_i(a | s) for every infoset of `player`.
pub fn to_sequence_form<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    player: Player,
) -> Result<SequenceFormStrategy<T>> {
    profile.check_dims(tree)?;
    let mut reach: Vec<Vec<T>> = vec![Vec::new(); tree.num_infosets()];
    let parent: Vec<Option<Sequence>> = tree.infosets.iter().map(|i| i.parent_sequence).collect();
    for &s in &tree.player_infosets[player.index()] {
        let base = parent[s].map_or_else(T::one, |q| reach[q.infoset][q.action]);
        reach[s] = profile.get(s).iter().map(|&p| base * p).collect();
    }
    Ok(SequenceFormStrategy { player, reach, parent })
}

/// Reach-probability contributions at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reach<T> {
    /// μ_1(σ_1(h)), μ_2(σ_2(h)).
    pub player: [T; 2],
    /// μ_c(h).
    pub chance: T,
}

impl<T: Scalar> Reach<T> {
    #[inline]
    pub fn total(&self) -> T {
        self.player[0] * self.player[1] * self.chance
    }

    /// Chance times the opponent's contribution: the counterfactual weight for `p`.
    #[inline]
    pub fn external(&self, p: Player) -> T {
        self.chance * self.player[p.opponent().index()]
    }
}

/// Forward pass computing (μ_1, μ_2, μ_c) at every node.
pub fn reach_probabilities<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>) -> Vec<Reach<T>> {
    let mut out = vec![
        Reach {
            player: [T::one(), T::one()],
            chance: T::one(),
        };
        tree.num_nodes()
    ];
    for (h, node) in tree.nodes.iter().enumerate() {
        let here = out[h];
        match node.kind {
            NodeKind::Terminal => {}
            NodeKind::Chance => {
                for e in &node.actions {
                    let mut r = here;
                    r.chance = here.chance * e.prob.unwrap_or_else(T::zero);
                    out[e.child] = r;
                }
            }
            NodeKind::Decision(p) => {
                let pi = profile.get(node.infoset.expect("decision infoset"));
                for (a, e) in node.actions.iter().enumerate() {
                    let mut r = here;
                    r.player[p.index()] = here.player[p.index()] * pi[a];
                    out[e.child] = r;
                }
            }
        }
    }
    out
}

/// Player one's expected utility by backward induction over the tree.
pub fn expected_utility<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>) -> T {
    let mut value = vec![T::zero(); tree.num_nodes()];
    for h in (0..tree.num_nodes()).rev() {
        let node = &tree.nodes[h];
        value[h] = match node.kind {
            NodeKind::Terminal => node.utility_p1.unwrap_or_else(T::zero),
            NodeKind::Chance => node
                .actions
                .iter()
                .map(|e| e.prob.unwrap_or_else(T::zero) * value[e.child])
                .sum(),
            NodeKind::Decision(_) => {
                let pi = profile.get(node.infoset.expect("decision infoset"));
                node.actions.iter().zip(pi).map(|(e, &p)| p * value[e.child]).sum()
            }
        };
    }
    value[tree.root]
}

/// One nonzero entry of the sequence-form payoff matrix: A[σ_1, σ_2] += μ_c · U_1.
#[derive(Clone, Copy, Debug)]
pub struct PayoffEntry<T> {
    pub sequences: [Option<Sequence>; 2],
    pub weight: T,
}

/// The payoff matrix as its list of terminal entries.
pub fn payoff_entries<T: Scalar>(tree: &GameTree<T>) -> Vec<PayoffEntry<T>> {
    let chance = tree.chance_reach();
    tree.terminals()
        .map(|z| {
            let node = &tree.nodes[z];
            PayoffEntry {
                sequences: node.sequences,
                weight: chance[z] * node.utility_p1.unwrap_or_else(T::zero),
            }
        })
        .collect()
}

/// μ_1ᵀ A μ_2 from the terminal payoff entries.
pub fn bilinear_utility<T: Scalar>(
    entries: &[PayoffEntry<T>],
    mu1: &SequenceFormStrategy<T>,
    mu2: &SequenceFormStrategy<T>,
) -> T {
    entries
        .iter()
        .map(|e| mu1.of(e.sequences[0]) * mu2.of(e.sequences[1]) * e.weight)
        .sum()
}

/// Exploration distribution ν_s for every infoset.
///
/// Each own sequence (s, a) is weighted by the number of own decision leaves
/// below it, counting (s, a) itself as one leaf when no own infoset follows.
/// The weights telescope along any own path, so products of ν are at least
/// 1 / (number of leaves below the first own infoset).
pub fn exploration_distribution<T: Scalar>(tree: &GameTree<T>) -> Vec<Vec<T>> {
    let n = tree.num_infosets();
    let mut leaves = vec![0usize; n];
    let mut action_leaves: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in (0..n).rev() {
        let info = &tree.infosets[s];
        let counts: Vec<usize> = info
            .children
            .iter()
            .map(|kids| kids.iter().map(|&c| leaves[c]).sum::<usize>().max(1))
            .collect();
        leaves[s] = counts.iter().sum();
        action_leaves[s] = counts;
    }
    action_leaves
        .into_iter()
        .zip(leaves)
        .map(|(counts, total)| {
            let total = T::from_usize_lossy(total);
            counts.into_iter().map(|c| T::from_usize_lossy(c) / total).collect()
        })
        .collect()
}

/// γ₀^D / |S|: certified floor on sequence-form entries of perturbed profiles.
pub fn gamma_lower_bound<T: Scalar>(tree: &GameTree<T>, gamma0: T) -> T {
    let depth = tree.max_own_depth() as i32;
    gamma0.powi(depth) / T::from_usize_lossy(tree.num_infosets().max(1))
}
