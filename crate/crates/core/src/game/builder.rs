use std::collections::HashMap;

use super::tree::{GameTree, Player, RawNode};
use crate::error::Result;
use crate::scalar::Scalar;

/// Incremental assembly of [`RawNode`]s with infosets keyed by name.
pub(crate) struct TreeBuilder<T> {
    nodes: Vec<RawNode<T>>,
    infosets: HashMap<String, usize>,
}

impl<T: Scalar> TreeBuilder<T> {
    pub fn new() -> Self {
        TreeBuilder {
            nodes: Vec::new(),
            infosets: HashMap::new(),
        }
    }

    pub fn reserve(&mut self) -> usize {
        self.nodes.push(RawNode::terminal(T::zero()));
        self.nodes.len() - 1
    }

    pub fn set(&mut self, id: usize, node: RawNode<T>) {
        self.nodes[id] = node;
    }

    pub fn infoset(&mut self, player: Player, key: String) -> usize {
        let next = self.infosets.len();
        *self.infosets.entry(format!("{player}:{key}")).or_insert(next)
    }

    pub fn build(self, name: &str, root: usize, scale: T) -> Result<GameTree<T>> {
        GameTree::from_raw(name, self.nodes, root, scale)
    }
}
