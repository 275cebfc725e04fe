//! JSON game documents.
//!
//! ```json
//! {"name": "mp", "root": 0, "nodes": [
//!   {"id": 0, "kind": "p1", "infoset": 0, "actions": [{"label": "H", "child": 1}, ...]},
//!   {"id": 3, "kind": "terminal", "utility_p1": 1.0, "actions": []}
//! ]}
//! ```

use serde::{Deserialize, Serialize};

use super::tree::{Edge, GameTree, NodeKind, Player, RawNode};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameDocument {
    pub name: String,
    pub nodes: Vec<NodeDocument>,
    pub root: usize,
    /// Payoff units per unit of utility; not part of the required format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKindDocument {
    P1,
    P2,
    Chance,
    Terminal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    pub kind: NodeKindDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infoset: Option<usize>,
    #[serde(default)]
    pub actions: Vec<ActionDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_p1: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionDocument {
    pub label: String,
    pub child: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

/// Parses and validates a JSON game document.
pub fn load_game<T: Scalar>(text: &str) -> Result<GameTree<T>> {
    let doc: GameDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_document(&doc)
}

pub fn from_document<T: Scalar>(doc: &GameDocument) -> Result<GameTree<T>> {
    let n = doc.nodes.len();
    let mut slots: Vec<Option<RawNode<T>>> = vec![None; n];
    for nd in &doc.nodes {
        if nd.id >= n {
            return Err(Error::Parse(format!("node id {} is not dense (have {n} nodes)", nd.id)));
        }
        if slots[nd.id].is_some() {
            return Err(Error::Parse(format!("duplicate node id {}", nd.id)));
        }
        let kind = match nd.kind {
            NodeKindDocument::P1 => NodeKind::Decision(Player::One),
            NodeKindDocument::P2 => NodeKind::Decision(Player::Two),
            NodeKindDocument::Chance => NodeKind::Chance,
            NodeKindDocument::Terminal => NodeKind::Terminal,
        };
        let is_chance = kind == NodeKind::Chance;
        for a in &nd.actions {
            if is_chance != a.prob.is_some() {
                return Err(Error::validation(
                    "chance probabilities",
                    Some(nd.id),
                    "\"prob\" is required on chance edges and forbidden elsewhere",
                ));
            }
        }
        if (kind == NodeKind::Terminal) != nd.utility_p1.is_some() {
            return Err(Error::validation(
                "terminal utility",
                Some(nd.id),
                "\"utility_p1\" is required on terminal nodes and forbidden elsewhere",
            ));
        }
        slots[nd.id] = Some(RawNode {
            kind,
            infoset: nd.infoset,
            actions: nd
                .actions
                .iter()
                .map(|a| Edge {
                    label: a.label.clone(),
                    child: a.child,
                    prob: a.prob.map(T::lit),
                })
                .collect(),
            utility_p1: nd.utility_p1.map(T::lit),
        });
    }
    let raw = slots.into_iter().map(|s| s.expect("all ids filled")).collect();
    let scale = T::lit(doc.utility_scale.unwrap_or(1.0));
    GameTree::from_raw(doc.name.clone(), raw, doc.root, scale)
}

/// Serializes a tree in its canonical (breadth-first) numbering.
pub fn to_document<T: Scalar>(tree: &GameTree<T>) -> GameDocument {
    let nodes = tree
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| NodeDocument {
            id,
            kind: match n.kind {
                NodeKind::Decision(Player::One) => NodeKindDocument::P1,
                NodeKind::Decision(Player::Two) => NodeKindDocument::P2,
                NodeKind::Chance => NodeKindDocument::Chance,
                NodeKind::Terminal => NodeKindDocument::Terminal,
            },
            infoset: n.infoset,
            actions: n
                .actions
                .iter()
                .map(|e| ActionDocument {
                    label: e.label.clone(),
                    child: e.child,
                    prob: e.prob.map(Scalar::as_f64),
                })
                .collect(),
            utility_p1: n.utility_p1.map(Scalar::as_f64),
        })
        .collect();
    let scale = tree.utility_scale.as_f64();
    GameDocument {
        name: tree.name.clone(),
        nodes,
        root: tree.root,
        utility_scale: (scale != 1.0).then_some(scale),
    }
}

pub fn to_json<T: Scalar>(tree: &GameTree<T>) -> String {
    serde_json::to_string_pretty(&to_document(tree)).expect("game documents always serialize")
}
