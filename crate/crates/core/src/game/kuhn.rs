//! Three-card Kuhn poker.

use super::builder::TreeBuilder;
use super::tree::{GameTree, Player, RawNode};
use crate::scalar::Scalar;

const CARDS: [&str; 3] = ["J", "Q", "K"];

/// Largest absolute payoff in chips (ante plus one bet).
pub const KUHN_CHIP_SCALE: f64 = 2.0;

/// Standard Kuhn poker: one chance node deals an ordered pair of distinct cards,
/// then check/bet followed by call/fold. Utilities are chips divided by 2.
pub fn build_kuhn<T: Scalar>() -> GameTree<T> {
    let mut b = TreeBuilder::<T>::new();
    let root = b.reserve();
    let mut deals = Vec::new();
    let p = T::one() / T::lit(6.0);
    for c1 in 0..3 {
        for c2 in 0..3 {
            if c1 == c2 {
                continue;
            }
            let child = betting(&mut b, [c1, c2], "");
            deals.push((format!("{}{}", CARDS[c1], CARDS[c2]), child, p));
        }
    }
    b.set(root, RawNode::chance(deals));
    b.build("kuhn", root, T::lit(KUHN_CHIP_SCALE))
        .expect("kuhn construction is valid")
}

fn betting<T: Scalar>(b: &mut TreeBuilder<T>, cards: [usize; 2], history: &str) -> usize {
    let id = b.reserve();
    let showdown = |stake: f64| {
        let sign = if cards[0] > cards[1] { 1.0 } else { -1.0 };
        T::lit(sign * stake / KUHN_CHIP_SCALE)
    };
    let node = match history {
        "pp" => RawNode::terminal(showdown(1.0)),
        "pbb" | "bb" => RawNode::terminal(showdown(2.0)),
        "pbp" => RawNode::terminal(T::lit(-1.0 / KUHN_CHIP_SCALE)),
        "bp" => RawNode::terminal(T::lit(1.0 / KUHN_CHIP_SCALE)),
        _ => {
            let player = if history.len() % 2 == 0 { Player::One } else { Player::Two };
            let card = cards[player.index()];
            let s = b.infoset(player, format!("{}{}", CARDS[card], history));
            let (check, bet) = if history.ends_with('b') { ("fold", "call") } else { ("check", "bet") };
            let pass = betting(b, cards, &format!("{history}p"));
            let wager = betting(b, cards, &format!("{history}b"));
            RawNode::decision(player, s, vec![(check.to_string(), pass), (bet.to_string(), wager)])
        }
    };
    b.set(id, node);
    id
}
