//! Leduc hold'em: six cards (three ranks in two suits), one private card per
//! player, one public card, two betting rounds with bet sizes 2 and 4 and at
//! most two raises per round.

use super::builder::TreeBuilder;
use super::tree::{GameTree, Player, RawNode};
use crate::scalar::Scalar;

const RANKS: [&str; 3] = ["J", "Q", "K"];
const SUITS: [&str; 2] = ["s", "h"];
const DECK: usize = 6;
const ANTE: f64 = 1.0;
const RAISE: [f64; 2] = [2.0, 4.0];
const MAX_RAISES: usize = 2;

/// Largest possible win in chips: ante plus two capped raising rounds.
pub const LEDUC_CHIP_SCALE: f64 = ANTE + 2.0 * RAISE[0] + 2.0 * RAISE[1];

fn card_name(card: usize) -> String {
    format!("{}{}", RANKS[card / 2], SUITS[card % 2])
}

#[derive(Clone)]
struct State {
    cards: [usize; 2],
    public: Option<usize>,
    contrib: [f64; 2],
    round: usize,
    raises: usize,
    acted: usize,
    to_act: Player,
    /// Betting so far, rounds separated by '/'.
    history: String,
}

/// Builds the standard Leduc tree; utilities are chips divided by [`LEDUC_CHIP_SCALE`].
pub fn build_leduc<T: Scalar>() -> GameTree<T> {
    let mut b = TreeBuilder::<T>::new();
    let root = b.reserve();
    let p = T::one() / T::lit((DECK * (DECK - 1)) as f64);
    let mut deals = Vec::new();
    for c1 in 0..DECK {
        for c2 in 0..DECK {
            if c1 == c2 {
                continue;
            }
            let state = State {
                cards: [c1, c2],
                public: None,
                contrib: [ANTE, ANTE],
                round: 0,
                raises: 0,
                acted: 0,
                to_act: Player::One,
                history: String::new(),
            };
            let child = decision(&mut b, state);
            deals.push((format!("{}{}", card_name(c1), card_name(c2)), child, p));
        }
    }
    b.set(root, RawNode::chance(deals));
    b.build("leduc", root, T::lit(LEDUC_CHIP_SCALE))
        .expect("leduc construction is valid")
}

fn decision<T: Scalar>(b: &mut TreeBuilder<T>, st: State) -> usize {
    let id = b.reserve();
    let player = st.to_act;
    let i = player.index();
    let facing = st.contrib[1 - i] > st.contrib[i];
    let key = format!(
        "{}|{}|{}",
        card_name(st.cards[i]),
        st.public.map(card_name).unwrap_or_default(),
        st.history
    );
    let s = b.infoset(player, key);

    let mut actions = Vec::new();
    if facing {
        let mut next = st.clone();
        next.history.push('f');
        let folded = b.reserve();
        let u = player.sign::<f64>() * -next.contrib[i];
        b.set(folded, RawNode::terminal(T::lit(u / LEDUC_CHIP_SCALE)));
        actions.push(("fold".to_string(), folded));
    }
    {
        let mut next = st.clone();
        next.contrib[i] = st.contrib[1 - i];
        next.history.push('c');
        next.acted += 1;
        let child = if st.acted >= 1 { end_round(b, next) } else {
            next.to_act = player.opponent();
            decision(b, next)
        };
        actions.push((if facing { "call" } else { "check" }.to_string(), child));
    }
    if st.raises < MAX_RAISES {
        let mut next = st.clone();
        next.contrib[i] = st.contrib[1 - i] + RAISE[st.round];
        next.history.push('r');
        next.raises += 1;
        next.acted += 1;
        next.to_act = player.opponent();
        let child = decision(b, next);
        actions.push(("raise".to_string(), child));
    }
    b.set(id, RawNode::decision(player, s, actions));
    id
}

fn end_round<T: Scalar>(b: &mut TreeBuilder<T>, st: State) -> usize {
    if st.round == 1 {
        let id = b.reserve();
        b.set(id, RawNode::terminal(T::lit(showdown(&st) / LEDUC_CHIP_SCALE)));
        return id;
    }
    let id = b.reserve();
    let remaining: Vec<usize> = (0..DECK).filter(|c| !st.cards.contains(c)).collect();
    let p = T::one() / T::from_usize_lossy(remaining.len());
    let mut outcomes = Vec::new();
    for card in remaining {
        let mut next = st.clone();
        next.public = Some(card);
        next.round = 1;
        next.raises = 0;
        next.acted = 0;
        next.to_act = Player::One;
        next.history.push('/');
        let child = decision(b, next);
        outcomes.push((card_name(card), child, p));
    }
    b.set(id, RawNode::chance(outcomes));
    id
}

/// Player one's chip result at showdown; contributions are equal here.
fn showdown(st: &State) -> f64 {
    let public = st.public.expect("showdown after public card") / 2;
    let strength = |card: usize| {
        let rank = card / 2;
        if rank == public { 10 + rank } else { rank }
    };
    let (a, b) = (strength(st.cards[0]), strength(st.cards[1]));
    match a.cmp(&b) {
        std::cmp::Ordering::Greater => st.contrib[1],
        std::cmp::Ordering::Less => -st.contrib[0],
        std::cmp::Ordering::Equal => 0.0,
    }
}
