use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One of the two strategic players. Chance is not a `Player`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// +1 for player one, -1 for player two: converts player-one utilities.
    #[inline]
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Player::One => T::one(),
            Player::Two => -T::one(),
        }
    }

    pub fn from_number(n: u8) -> Option<Player> {
        match n {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::One => write!(f, "1"),
            Player::Two => write!(f, "2"),
        }
    }
}

/// Who moves at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Decision(Player),
    Chance,
    Terminal,
}

/// An (infoset, action index) pair: a player's sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence {
    pub infoset: usize,
    pub action: usize,
}

#[derive(Clone, Debug)]
pub struct Edge<T> {
    pub label: String,
    pub child: usize,
    /// Present exactly on chance edges.
    pub prob: Option<T>,
}

#[derive(Clone, Debug)]
pub struct Node<T> {
    pub kind: NodeKind,
    pub infoset: Option<usize>,
    pub actions: Vec<Edge<T>>,
    /// Present exactly on terminal nodes.
    pub utility_p1: Option<T>,
    /// Number of edges from the root.
    pub depth: usize,
    /// Parent node and the index of the action leading here.
    pub parent: Option<(usize, usize)>,
    /// Last own sequence of each player on the path from the root (σ_i(h)).
    pub sequences: [Option<Sequence>; 2],
}

impl<T> Node<T> {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal)
    }

    pub fn player(&self) -> Option<Player> {
        match self.kind {
            NodeKind::Decision(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Infoset {
    pub player: Player,
    pub members: Vec<usize>,
    pub actions: Vec<String>,
    /// σ(s): the owner's last sequence before reaching the infoset.
    pub parent_sequence: Option<Sequence>,
    /// Maximum node depth among the members.
    pub depth: usize,
    /// Number of own infosets on the path from the root, this one included (1-based).
    pub own_depth: usize,
    /// Own infosets whose parent sequence is (this, a), indexed by action.
    pub children: Vec<Vec<usize>>,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// Node description used to assemble a [`GameTree`]; node and infoset ids are arbitrary but dense.
#[derive(Clone, Debug)]
pub struct RawNode<T> {
    pub kind: NodeKind,
    pub infoset: Option<usize>,
    pub actions: Vec<Edge<T>>,
    pub utility_p1: Option<T>,
}

impl<T: Scalar> RawNode<T> {
    pub fn terminal(utility_p1: T) -> Self {
        RawNode {
            kind: NodeKind::Terminal,
            infoset: None,
            actions: Vec::new(),
            utility_p1: Some(utility_p1),
        }
    }

    pub fn chance(outcomes: Vec<(String, usize, T)>) -> Self {
        RawNode {
            kind: NodeKind::Chance,
            infoset: None,
            actions: outcomes
                .into_iter()
                .map(|(label, child, p)| Edge {
                    label,
                    child,
                    prob: Some(p),
                })
                .collect(),
            utility_p1: None,
        }
    }

    pub fn decision(player: Player, infoset: usize, actions: Vec<(String, usize)>) -> Self {
        RawNode {
            kind: NodeKind::Decision(player),
            infoset: Some(infoset),
            actions: actions
                .into_iter()
                .map(|(label, child)| Edge {
                    label,
                    child,
                    prob: None,
                })
                .collect(),
            utility_p1: None,
        }
    }
}

/// Immutable two-player zero-sum game tree.
///
/// Nodes are stored in breadth-first order from the root (index 0), so every
/// parent precedes its children. Infosets are numbered by first appearance in
/// that order, which makes every infoset precede the infosets that follow it
/// in any player's history.
#[derive(Clone, Debug)]
pub struct GameTree<T> {
    pub name: String,
    pub nodes: Vec<Node<T>>,
    pub root: usize,
    pub infosets: Vec<Infoset>,
    /// Infoset ids owned by each player, ascending.
    pub player_infosets: [Vec<usize>; 2],
    /// Payoff units per unit of stored utility (e.g. 2 chips for Kuhn).
    pub utility_scale: T,
    /// Offset of each infoset's first action in a flat (infoset, action) indexing.
    pub action_offsets: Vec<usize>,
    pub num_sequences: usize,
}

const PROB_TOL: f64 = 1e-9;
const UTILITY_TOL: f64 = 1e-12;

impl<T: Scalar> GameTree<T> {
    /// Builds and validates a tree, including perfect recall.
    pub fn from_raw(name: impl Into<String>, raw: Vec<RawNode<T>>, root: usize, utility_scale: T) -> Result<Self> {
        let tree = Self::from_raw_unchecked_recall(name, raw, root, utility_scale)?;
        if let Some(v) = tree.validate_perfect_recall().violations.first() {
            return Err(Error::validation(
                "perfect recall",
                Some(v.node),
                format!(
                    "node {} and node {} of infoset {} have different own histories",
                    v.reference, v.node, v.infoset
                ),
            ));
        }
        Ok(tree)
    }

    /// Builds and validates every structural invariant except perfect recall.
    pub fn from_raw_unchecked_recall(
        name: impl Into<String>,
        raw: Vec<RawNode<T>>,
        root: usize,
        utility_scale: T,
    ) -> Result<Self> {
        let n = raw.len();
        if root >= n {
            return Err(Error::validation("root", None, format!("root id {root} out of range ({n} nodes)")));
        }
        let num_infosets = check_raw_nodes(&raw)?;

        // Breadth-first renumbering; also detects cycles, shared children and unreachable nodes.
        let mut new_id = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        new_id[root] = 0;
        while let Some(old) = queue.pop_front() {
            order.push(old);
            for edge in &raw[old].actions {
                let c = edge.child;
                if c == root || new_id[c] != usize::MAX {
                    return Err(Error::validation(
                        "single parent",
                        Some(c),
                        "node is reached twice (cycle or shared child)",
                    ));
                }
                new_id[c] = order.len() + queue.len();
                queue.push_back(c);
            }
        }
        if order.len() != n {
            let orphan = (0..n).find(|&i| new_id[i] == usize::MAX).unwrap_or(0);
            return Err(Error::validation("single root", Some(orphan), "node unreachable from the root"));
        }

        // Infosets renumbered by first appearance.
        let mut infoset_id = vec![usize::MAX; num_infosets];
        let mut infoset_count = 0;
        for &old in &order {
            if let Some(s) = raw[old].infoset {
                if infoset_id[s] == usize::MAX {
                    infoset_id[s] = infoset_count;
                    infoset_count += 1;
                }
            }
        }
        if infoset_count != num_infosets {
            return Err(Error::validation("dense infoset ids", None, "some infoset id has no member node"));
        }

        let mut nodes: Vec<Node<T>> = order
            .iter()
            .map(|&old| {
                let r = &raw[old];
                Node {
                    kind: r.kind,
                    infoset: r.infoset.map(|s| infoset_id[s]),
                    actions: r
                        .actions
                        .iter()
                        .map(|e| Edge {
                            label: e.label.clone(),
                            child: new_id[e.child],
                            prob: e.prob,
                        })
                        .collect(),
                    utility_p1: r.utility_p1,
                    depth: 0,
                    parent: None,
                    sequences: [None, None],
                }
            })
            .collect();

        let mut infosets: Vec<Option<Infoset>> = vec![None; infoset_count];
        for h in 0..nodes.len() {
            let children: Vec<(usize, usize)> = nodes[h].actions.iter().enumerate().map(|(a, e)| (a, e.child)).collect();
            let seq_here = nodes[h].infoset.map(|s| s);
            for (a, c) in children {
                let mut seqs = nodes[h].sequences;
                if let (NodeKind::Decision(p), Some(s)) = (nodes[h].kind, seq_here) {
                    seqs[p.index()] = Some(Sequence { infoset: s, action: a });
                }
                let depth = nodes[h].depth + 1;
                let child = &mut nodes[c];
                child.depth = depth;
                child.parent = Some((h, a));
                child.sequences = seqs;
            }
            if let (NodeKind::Decision(p), Some(s)) = (nodes[h].kind, nodes[h].infoset) {
                let labels: Vec<String> = nodes[h].actions.iter().map(|e| e.label.clone()).collect();
                match &mut infosets[s] {
                    None => {
                        infosets[s] = Some(Infoset {
                            player: p,
                            members: vec![h],
                            actions: labels,
                            parent_sequence: nodes[h].sequences[p.index()],
                            depth: nodes[h].depth,
                            own_depth: 0,
                            children: Vec::new(),
                        });
                    }
                    Some(info) => {
                        if info.player != p {
                            return Err(Error::validation(
                                "infoset owner",
                                Some(h),
                                format!("infoset {s} mixes players"),
                            ));
                        }
                        if info.actions != labels {
                            return Err(Error::validation(
                                "infoset action set",
                                Some(h),
                                format!("infoset {s} members have different action sets"),
                            ));
                        }
                        info.members.push(h);
                        info.depth = info.depth.max(nodes[h].depth);
                    }
                }
            }
        }
        let mut infosets: Vec<Infoset> = infosets.into_iter().map(|i| i.expect("dense infosets")).collect();

        for s in 0..infosets.len() {
            infosets[s].children = vec![Vec::new(); infosets[s].actions.len()];
        }
        for s in 0..infosets.len() {
            match infosets[s].parent_sequence {
                Some(seq) => {
                    infosets[s].own_depth = infosets[seq.infoset].own_depth + 1;
                    infosets[seq.infoset].children[seq.action].push(s);
                }
                None => infosets[s].own_depth = 1,
            }
        }

        let mut player_infosets = [Vec::new(), Vec::new()];
        let mut action_offsets = Vec::with_capacity(infosets.len());
        let mut offset = 0;
        for (s, info) in infosets.iter().enumerate() {
            player_infosets[info.player.index()].push(s);
            action_offsets.push(offset);
            offset += info.actions.len();
        }

        Ok(GameTree {
            name: name.into(),
            nodes,
            root: 0,
            infosets,
            player_infosets,
            utility_scale,
            action_offsets,
            num_sequences: offset,
        })
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_terminal()).map(|(i, _)| i)
    }

    /// Longest root-to-terminal path length in edges.
    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// D: the largest number of own infosets on any root path.
    pub fn max_own_depth(&self) -> usize {
        self.infosets.iter().map(|i| i.own_depth).max().unwrap_or(0)
    }

    /// Σ_{h∈s} μ_c(h) for every infoset.
    pub fn chance_mass(&self) -> Vec<T> {
        let chance = self.chance_reach();
        self.infosets
            .iter()
            .map(|info| info.members.iter().map(|&h| chance[h]).sum())
            .collect()
    }

    /// μ_c(h) for every node.
    pub fn chance_reach(&self) -> Vec<T> {
        let mut reach = vec![T::one(); self.nodes.len()];
        for (h, node) in self.nodes.iter().enumerate() {
            if let NodeKind::Chance = node.kind {
                for e in &node.actions {
                    reach[e.child] = reach[h] * e.prob.unwrap_or_else(T::zero);
                }
            } else {
                for e in &node.actions {
                    reach[e.child] = reach[h];
                }
            }
        }
        reach
    }

    /// Lists infoset members whose owner's history differs from the first member's.
    pub fn validate_perfect_recall(&self) -> RecallReport {
        let mut violations = Vec::new();
        for (s, info) in self.infosets.iter().enumerate() {
            let p = info.player;
            let reference = info.members[0];
            let ref_history = self.own_history(reference, p);
            for &h in &info.members[1..] {
                if self.own_history(h, p) != ref_history {
                    violations.push(RecallViolation {
                        infoset: s,
                        reference,
                        node: h,
                    });
                }
            }
        }
        RecallReport { violations }
    }

    /// The (infoset, action) pairs of `player` on the path from the root to `h`, root first.
    pub fn own_history(&self, h: usize, player: Player) -> Vec<Sequence> {
        let mut history = Vec::new();
        let mut cur = h;
        while let Some((parent, a)) = self.nodes[cur].parent {
            if let (NodeKind::Decision(p), Some(s)) = (self.nodes[parent].kind, self.nodes[parent].infoset) {
                if p == player {
                    history.push(Sequence { infoset: s, action: a });
                }
            }
            cur = parent;
        }
        history.reverse();
        history
    }

    /// Infosets of either player appearing in the sequences σ_1(h), σ_2(h) of some member h of `s`.
    pub fn ancestor_infosets(&self, s: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &h in &self.infosets[s].members {
            for p in Player::BOTH {
                for seq in self.own_history(h, p) {
                    if !out.contains(&seq.infoset) {
                        out.push(seq.infoset);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Same tree with utilities converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> GameTree<U> {
        let conv = |x: T| U::lit(x.as_f64());
        GameTree {
            name: self.name.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    kind: n.kind,
                    infoset: n.infoset,
                    actions: n
                        .actions
                        .iter()
                        .map(|e| Edge {
                            label: e.label.clone(),
                            child: e.child,
                            prob: e.prob.map(conv),
                        })
                        .collect(),
                    utility_p1: n.utility_p1.map(conv),
                    depth: n.depth,
                    parent: n.parent,
                    sequences: n.sequences,
                })
                .collect(),
            root: self.root,
            infosets: self.infosets.clone(),
            player_infosets: self.player_infosets.clone(),
            utility_scale: conv(self.utility_scale),
            action_offsets: self.action_offsets.clone(),
            num_sequences: self.num_sequences,
        }
    }
}

/// Checks per-node invariants and returns the number of infosets.
fn check_raw_nodes<T: Scalar>(raw: &[RawNode<T>]) -> Result<usize> {
    let n = raw.len();
    let mut infoset_player: Vec<Option<Player>> = Vec::new();
    for (i, node) in raw.iter().enumerate() {
        for e in &node.actions {
            if e.child >= n {
                return Err(Error::validation(
                    "child index",
                    Some(i),
                    format!("child {} out of range", e.child),
                ));
            }
        }
        match node.kind {
            NodeKind::Terminal => {
                if !node.actions.is_empty() {
                    return Err(Error::validation("terminal actions", Some(i), "terminal node has actions"));
                }
                let u = node
                    .utility_p1
                    .ok_or_else(|| Error::validation("terminal utility", Some(i), "terminal node without utility"))?;
                if !u.is_finite() || u.abs().as_f64() > 1.0 + UTILITY_TOL {
                    return Err(Error::validation(
                        "utility range",
                        Some(i),
                        format!("utility {u} outside [-1, 1]"),
                    ));
                }
                if node.infoset.is_some() {
                    return Err(Error::validation("terminal infoset", Some(i), "terminal node has an infoset"));
                }
            }
            NodeKind::Chance => {
                if node.utility_p1.is_some() {
                    return Err(Error::validation("terminal utility", Some(i), "non-terminal node has a utility"));
                }
                if node.actions.is_empty() {
                    return Err(Error::validation("chance actions", Some(i), "chance node without outcomes"));
                }
                if node.infoset.is_some() {
                    return Err(Error::validation("chance infoset", Some(i), "chance node has an infoset"));
                }
                let mut total = 0.0;
                for e in &node.actions {
                    let p = e.prob.ok_or_else(|| {
                        Error::validation("chance probabilities", Some(i), "chance outcome without probability")
                    })?;
                    if !(p.as_f64() > 0.0) {
                        return Err(Error::validation(
                            "chance probabilities",
                            Some(i),
                            format!("non-positive chance probability {p}"),
                        ));
                    }
                    total += p.as_f64();
                }
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::validation(
                        "chance probabilities",
                        Some(i),
                        format!("chance probabilities sum to {total}"),
                    ));
                }
            }
            NodeKind::Decision(p) => {
                if node.utility_p1.is_some() {
                    return Err(Error::validation("terminal utility", Some(i), "non-terminal node has a utility"));
                }
                if node.actions.is_empty() {
                    return Err(Error::validation("decision actions", Some(i), "decision node without actions"));
                }
                if node.actions.iter().any(|e| e.prob.is_some()) {
                    return Err(Error::validation(
                        "chance probabilities",
                        Some(i),
                        "probability given on a player edge",
                    ));
                }
                let s = node
                    .infoset
                    .ok_or_else(|| Error::validation("decision infoset", Some(i), "decision node without infoset"))?;
                if s >= infoset_player.len() {
                    infoset_player.resize(s + 1, None);
                }
                match infoset_player[s] {
                    None => infoset_player[s] = Some(p),
                    Some(q) if q != p => {
                        return Err(Error::validation(
                            "infoset owner",
                            Some(i),
                            format!("infoset {s} mixes players"),
                        ))
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(infoset_player.len())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecallViolation {
    pub infoset: usize,
    /// First member of the infoset, used as the reference history.
    pub reference: usize,
    pub node: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RecallReport {
    pub violations: Vec<RecallViolation>,
}

impl RecallReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(s: &str) -> String {
        s.to_string()
    }

    /// Player one picks H/T without seeing anything, player two picks H/T blind.
    pub(crate) fn matching_pennies_raw() -> Vec<RawNode<f64>> {
        vec![
            RawNode::decision(Player::One, 0, vec![(lbl("H"), 1), (lbl("T"), 2)]),
            RawNode::decision(Player::Two, 1, vec![(lbl("H"), 3), (lbl("T"), 4)]),
            RawNode::decision(Player::Two, 1, vec![(lbl("H"), 5), (lbl("T"), 6)]),
            RawNode::terminal(1.0),
            RawNode::terminal(-1.0),
            RawNode::terminal(-1.0),
            RawNode::terminal(1.0),
        ]
    }

    #[test]
    fn matching_pennies_structure() {
        let tree = GameTree::from_raw("mp", matching_pennies_raw(), 0, 1.0).unwrap();
        assert_eq!(tree.num_infosets(), 2);
        assert_eq!(tree.infosets[1].members.len(), 2);
        assert_eq!(tree.max_own_depth(), 1);
        assert_eq!(tree.height(), 2);
        assert!(tree.validate_perfect_recall().is_valid());
    }

    #[test]
    fn rejects_mixed_owner_and_action_sets() {
        let mut raw = matching_pennies_raw();
        raw[2] = RawNode::decision(Player::Two, 1, vec![(lbl("H"), 5), (lbl("X"), 6)]);
        let err = GameTree::from_raw("bad", raw, 0, 1.0).unwrap_err();
        assert!(err.to_string().contains("action set"), "{err}");

        let mut raw = matching_pennies_raw();
        raw[1] = RawNode::decision(Player::One, 1, vec![(lbl("H"), 3), (lbl("T"), 4)]);
        let err = GameTree::from_raw("bad", raw, 0, 1.0).unwrap_err();
        assert!(err.to_string().contains("infoset owner"), "{err}");
    }

    #[test]
    fn rejects_shared_child_and_unreachable_nodes() {
        let mut raw = matching_pennies_raw();
        raw[2] = RawNode::decision(Player::Two, 1, vec![(lbl("H"), 3), (lbl("T"), 6)]);
        let err = GameTree::from_raw("bad", raw, 0, 1.0).unwrap_err();
        assert!(err.to_string().contains("single"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_utility() {
        let mut raw = matching_pennies_raw();
        raw[3] = RawNode::terminal(1.5);
        let err = GameTree::from_raw("bad", raw, 0, 1.0).unwrap_err();
        assert!(err.to_string().contains("utility range"), "{err}");
    }

    #[test]
    fn imperfect_recall_is_reported_once() {
        // Player one moves twice; the second decision merges nodes reached via different own actions.
        let raw = vec![
            RawNode::decision(Player::One, 0, vec![(lbl("L"), 1), (lbl("R"), 2)]),
            RawNode::decision(Player::One, 1, vec![(lbl("l"), 3), (lbl("r"), 4)]),
            RawNode::decision(Player::One, 1, vec![(lbl("l"), 5), (lbl("r"), 6)]),
            RawNode::terminal(1.0),
            RawNode::terminal(0.0),
            RawNode::terminal(0.0),
            RawNode::terminal(1.0),
        ];
        let tree = GameTree::from_raw_unchecked_recall("forgetful", raw.clone(), 0, 1.0).unwrap();
        assert_eq!(tree.validate_perfect_recall().violations.len(), 1);
        let err = GameTree::from_raw("forgetful", raw, 0, 1.0).unwrap_err();
        assert!(err.to_string().contains("perfect recall"));
    }
}
