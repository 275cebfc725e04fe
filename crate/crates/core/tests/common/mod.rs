//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use qfr::game::{BehavioralProfile, GameTree, NodeKind, Player, RawNode};
use qfr::regularizers::{Family, Local, PerturbedSimplex, RegularizerSpec};
use rand::Rng;

/// Strictly positive random profile with entries bounded away from zero.
pub fn random_profile<R: Rng>(tree: &GameTree<f64>, rng: &mut R) -> BehavioralProfile<f64> {
    let strategy = tree
        .infosets
        .iter()
        .map(|info| {
            let w: Vec<f64> = (0..info.num_actions()).map(|_| 0.05 + rng.gen::<f64>()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        })
        .collect();
    BehavioralProfile::from_vecs(strategy)
}

/// Probability of the edge `(parent, action)` under `profile`, optionally skipping one player's moves.
fn edge_prob(tree: &GameTree<f64>, profile: &BehavioralProfile<f64>, parent: usize, a: usize, skip: Option<Player>) -> f64 {
    let node = &tree.nodes[parent];
    match node.kind {
        NodeKind::Chance => node.actions[a].prob.unwrap(),
        NodeKind::Decision(p) if Some(p) == skip => 1.0,
        NodeKind::Decision(_) => profile.get(node.infoset.unwrap())[a],
        NodeKind::Terminal => unreachable!(),
    }
}

/// Probability of walking from `from` down to `to` (1 when equal), or `None` if `to` is not below `from`.
pub fn path_prob(tree: &GameTree<f64>, profile: &BehavioralProfile<f64>, from: usize, to: usize, skip: Option<Player>) -> Option<f64> {
    let mut p = 1.0;
    let mut cur = to;
    while cur != from {
        let (parent, a) = tree.nodes[cur].parent?;
        p *= edge_prob(tree, profile, parent, a, skip);
        cur = parent;
    }
    Some(p)
}

/// Player one's expected utility as a sum over terminal paths.
pub fn path_utility(tree: &GameTree<f64>, profile: &BehavioralProfile<f64>) -> f64 {
    tree.terminals()
        .map(|z| path_prob(tree, profile, tree.root, z, None).unwrap() * tree.nodes[z].utility_p1.unwrap())
        .sum()
}

/// Player one's value at every node with the regularizer terms of every decision node below,
/// computed by pushing each node's contribution up along its ancestor chain.
pub fn augmented_values_oracle(
    tree: &GameTree<f64>,
    profile: &BehavioralProfile<f64>,
    tau: f64,
    spec: &RegularizerSpec<f64>,
) -> Vec<f64> {
    let mut value = vec![0.0; tree.num_nodes()];
    for (g, node) in tree.nodes.iter().enumerate() {
        let c = match node.kind {
            NodeKind::Terminal => node.utility_p1.unwrap(),
            NodeKind::Decision(p) => {
                let s = node.infoset.unwrap();
                let sign = if p == Player::One { 1.0 } else { -1.0 };
                -sign * tau * spec.local(s).value(profile.get(s))
            }
            NodeKind::Chance => continue,
        };
        let mut prob = 1.0;
        let mut cur = g;
        value[cur] += c;
        while let Some((parent, a)) = tree.nodes[cur].parent {
            prob *= edge_prob(tree, profile, parent, a, None);
            cur = parent;
            value[cur] += prob * c;
        }
    }
    value
}

pub struct FeedbackOracle {
    pub cf: Vec<Vec<f64>>,
    pub opp: Vec<f64>,
    pub own: Vec<f64>,
}

/// CF(s, a) = Σ_{h∈s} (chance · opponent reach of h) · (p's orientation value of h·a).
pub fn feedback_oracle(
    tree: &GameTree<f64>,
    profile: &BehavioralProfile<f64>,
    tau: f64,
    spec: &RegularizerSpec<f64>,
) -> FeedbackOracle {
    let values = augmented_values_oracle(tree, profile, tau, spec);
    let mut cf = Vec::new();
    let mut opp = Vec::new();
    let mut own = Vec::new();
    for info in &tree.infosets {
        let p = info.player;
        let sign = if p == Player::One { 1.0 } else { -1.0 };
        let mut row = vec![0.0; info.num_actions()];
        let mut o = 0.0;
        for &h in &info.members {
            let ext = path_prob(tree, profile, tree.root, h, Some(p)).unwrap();
            o += ext;
            for (a, e) in tree.nodes[h].actions.iter().enumerate() {
                row[a] += ext * sign * values[e.child];
            }
        }
        let h = info.members[0];
        let full = path_prob(tree, profile, tree.root, h, None).unwrap();
        let ext = path_prob(tree, profile, tree.root, h, Some(p)).unwrap();
        own.push(full / ext);
        cf.push(row);
        opp.push(o);
    }
    FeedbackOracle { cf, opp, own }
}

/// Every pure strategy of `player`, as a full profile template (other rows untouched).
pub fn pure_strategies(tree: &GameTree<f64>, player: Player, base: &BehavioralProfile<f64>) -> Vec<BehavioralProfile<f64>> {
    let infosets = &tree.player_infosets[player.index()];
    let mut out = vec![base.clone()];
    for &s in infosets {
        let n = tree.infosets[s].num_actions();
        let mut next = Vec::with_capacity(out.len() * n);
        for prof in &out {
            for a in 0..n {
                let mut p = prof.clone();
                p.strategy[s] = (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect();
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// max over pure strategies of `player`'s expected utility against `profile`.
pub fn enumerated_best_response(tree: &GameTree<f64>, profile: &BehavioralProfile<f64>, player: Player) -> f64 {
    let sign = if player == Player::One { 1.0 } else { -1.0 };
    pure_strategies(tree, player, profile)
        .iter()
        .map(|p| sign * path_utility(tree, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Labels of the edges from the root to `h`.
pub fn path_labels(tree: &GameTree<f64>, h: usize) -> Vec<String> {
    let mut labels = Vec::new();
    let mut cur = h;
    while let Some((parent, a)) = tree.nodes[cur].parent {
        labels.push(tree.nodes[parent].actions[a].label.clone());
        cur = parent;
    }
    labels.reverse();
    labels
}

/// The Kuhn equilibrium family with P1 bluff parameter `alpha` ∈ [0, 1/3].
///
/// P1: J bets α, Q checks and calls α + 1/3, K bets 3α; P2: K bets and calls,
/// Q checks and calls 1/3, J bets 1/3 after a check and folds to a bet.
pub fn kuhn_equilibrium(tree: &GameTree<f64>, alpha: f64) -> BehavioralProfile<f64> {
    let mut strategy = Vec::new();
    for info in &tree.infosets {
        let labels = path_labels(tree, info.members[0]);
        let deal = labels[0].as_bytes();
        let history: String = labels[1..]
            .iter()
            .map(|l| if l == "check" || l == "fold" { 'p' } else { 'b' })
            .collect();
        let card = deal[info.player.index()] as char;
        // Probability of the second action (bet or call).
        let second = match (info.player, card, history.as_str()) {
            (Player::One, 'J', "") => alpha,
            (Player::One, 'Q', "") => 0.0,
            (Player::One, 'K', "") => 3.0 * alpha,
            (Player::One, 'J', "pb") => 0.0,
            (Player::One, 'Q', "pb") => alpha + 1.0 / 3.0,
            (Player::One, 'K', "pb") => 1.0,
            (Player::Two, 'J', "p") => 1.0 / 3.0,
            (Player::Two, 'Q', "p") => 0.0,
            (Player::Two, 'K', "p") => 1.0,
            (Player::Two, 'J', "b") => 0.0,
            (Player::Two, 'Q', "b") => 1.0 / 3.0,
            (Player::Two, 'K', "b") => 1.0,
            other => panic!("unexpected kuhn infoset {other:?}"),
        };
        strategy.push(vec![1.0 - second, second]);
    }
    BehavioralProfile::from_vecs(strategy)
}

/// Two-action simultaneous game: P1 picks row, P2 picks column without observing it.
pub fn matrix_game(payoff: [[f64; 2]; 2]) -> GameTree<f64> {
    let mut raw = vec![
        RawNode::decision(Player::One, 0, vec![("H".into(), 1), ("T".into(), 2)]),
        RawNode::decision(Player::Two, 1, vec![("H".into(), 3), ("T".into(), 4)]),
        RawNode::decision(Player::Two, 1, vec![("H".into(), 5), ("T".into(), 6)]),
    ];
    for row in payoff {
        for u in row {
            raw.push(RawNode::terminal(u));
        }
    }
    GameTree::from_raw("matrix", raw, 0, 1.0).unwrap()
}

/// Prox objective ⟨x, g⟩ + τ₀ψ(x) + (1/η)D_ψ(x, x⁰), evaluated from its definition.
pub fn prox_objective(family: Family, alpha: f64, x: &[f64], x0: &[f64], g: &[f64], tau0: f64, eta: f64) -> f64 {
    let reg = Local::new(family, alpha);
    let lin: f64 = x.iter().zip(g).map(|(a, b)| a * b).sum();
    let div = match family {
        Family::Entropy => {
            alpha
                * x.iter()
                    .zip(x0)
                    .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
                    .sum::<f64>()
        }
        Family::Euclidean => alpha / 2.0 * x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
    };
    lin + tau0 * reg.value(x) + div / eta
}

/// Visits every point floor + (1 − floor mass)·c/k with c a composition of k into n parts,
/// choosing the largest k whose lattice has at most `budget` points.
pub fn for_each_lattice_point(simplex: &PerturbedSimplex<f64>, budget: usize, mut f: impl FnMut(&[f64])) -> usize {
    let n = simplex.len();
    let count = |k: usize| -> f64 {
        // C(k + n − 1, n − 1)
        (1..n).fold(1.0, |acc, i| acc * (k + i) as f64 / i as f64)
    };
    let mut k = 1;
    while count(k + 1) <= budget as f64 {
        k += 1;
    }
    let free = 1.0 - simplex.floor_mass();
    let floors: Vec<f64> = (0..n).map(|a| simplex.floor(a)).collect();
    let mut parts = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut visited = 0;
    fn rec(
        i: usize,
        left: usize,
        k: usize,
        parts: &mut [usize],
        x: &mut [f64],
        floors: &[f64],
        free: f64,
        visited: &mut usize,
        f: &mut dyn FnMut(&[f64]),
    ) {
        let n = parts.len();
        if i == n - 1 {
            parts[i] = left;
            for j in 0..n {
                x[j] = floors[j] + free * parts[j] as f64 / k as f64;
            }
            *visited += 1;
            f(x);
            return;
        }
        for c in 0..=left {
            parts[i] = c;
            rec(i + 1, left - c, k, parts, x, floors, free, visited, f);
        }
    }
    rec(0, k, k, &mut parts, &mut x, &floors, free, &mut visited, &mut f);
    visited
}

/// Random perturbed simplex over `n` actions with γ·Σν < 1.
pub fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> PerturbedSimplex<f64> {
    if rng.gen_bool(0.25) {
        return PerturbedSimplex::unconstrained(n);
    }
    let nu: Vec<f64> = (0..n).map(|_| 0.1 + rng.gen::<f64>()).collect();
    let total: f64 = nu.iter().sum();
    let nu: Vec<f64> = nu.into_iter().map(|v| v / total).collect();
    PerturbedSimplex::new(rng.gen_range(0.0..0.6), nu).unwrap()
}

/// Random point in the interior of a perturbed simplex.
pub fn random_interior<R: Rng>(simplex: &PerturbedSimplex<f64>, rng: &mut R) -> Vec<f64> {
    let n = simplex.len();
    let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let free = 1.0 - simplex.floor_mass();
    (0..n).map(|a| simplex.floor(a) + free * w[a] / total).collect()
}
