//! Game trees, benchmark games and strategy representations.

mod builder;
pub mod format;
mod kuhn;
mod leduc;
mod profile;
mod tree;

pub use format::{load_game, to_json};
pub use kuhn::{build_kuhn, KUHN_CHIP_SCALE};
pub use leduc::{build_leduc, LEDUC_CHIP_SCALE};
pub use profile::{
    bilinear_utility, expected_utility, exploration_distribution, gamma_lower_bound, payoff_entries,
    reach_probabilities, to_sequence_form, BehavioralProfile, PayoffEntry, Reach, SequenceFormStrategy,
};
pub use tree::{
    Edge, GameTree, Infoset, Node, NodeKind, Player, RawNode, RecallReport, RecallViolation, Sequence,
};
