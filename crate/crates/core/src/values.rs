//! Counterfactual values, Q-values and trajectory Q-values, plus the single-trajectory estimator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{reach_probabilities, BehavioralProfile, GameTree, NodeKind, Player, Reach};
use crate::regularizers::RegularizerSpec;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackKind {
    #[serde(rename = "cf")]
    CounterfactualValue,
    #[serde(rename = "q")]
    QValue,
    #[serde(rename = "tq")]
    TrajectoryQValue,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 3] = [
        FeedbackKind::CounterfactualValue,
        FeedbackKind::QValue,
        FeedbackKind::TrajectoryQValue,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FeedbackKind::CounterfactualValue => "cf",
            FeedbackKind::QValue => "q",
            FeedbackKind::TrajectoryQValue => "tq",
        }
    }
}

impl std::str::FromStr for FeedbackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf" => Ok(FeedbackKind::CounterfactualValue),
            "q" => Ok(FeedbackKind::QValue),
            "tq" => Ok(FeedbackKind::TrajectoryQValue),
            other => Err(Error::InvalidParameter(format!("unknown feedback kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Which regularizer terms are folded into the values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Augmentation {
    /// Every later decision node contributes −τψ (own) or +τψ (opponent), weighted by full reach.
    Bidilated,
    /// Only the player's own later infosets contribute −τψ, weighted by own reach.
    Dilated,
}

/// Values q(s, ·) of one kind with the multipliers m_s linking them to counterfactual values.
#[derive(Clone, Debug)]
pub struct FeedbackBundle<T> {
    pub kind: FeedbackKind,
    pub q: Vec<Vec<T>>,
    pub m: Vec<T>,
    /// CF(s, a), so that cf[s][a] = m[s] · q[s][a].
    pub cf: Vec<Vec<T>>,
    /// μ_{-p(s)}(s) = Σ_{h∈s} μ_c(h) μ_opp(σ_opp(h)).
    pub opp_reach: Vec<T>,
    /// μ_{p(s)}(σ(s)).
    pub own_reach: Vec<T>,
    pub tau: T,
    pub augmented: bool,
    /// Player one's (augmented) value at the root.
    pub root_value: T,
}

impl<T: Scalar> FeedbackBundle<T> {
    /// Largest |CF(s, a) − m_s q(s, a)| relative to max(1, |CF(s, a)|).
    pub fn relation_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for ((cf, q), &m) in self.cf.iter().zip(&self.q).zip(&self.m) {
            for (&c, &v) in cf.iter().zip(q) {
                let c = c.as_f64();
                let r = (c - m.as_f64() * v.as_f64()).abs() / c.abs().max(1.0);
                worst = worst.max(r);
            }
        }
        worst
    }
}

/// μ_{-p(s)}(s) for a single infoset.
pub fn opponent_reach<T: Scalar>(tree: &GameTree<T>, profile: &BehavioralProfile<T>, s: usize) -> T {
    let reach = reach_probabilities(tree, profile);
    let p = tree.infosets[s].player;
    tree.infosets[s].members.iter().map(|&h| reach[h].external(p)).sum()
}

/// μ_{-p(s)}(s) for every infoset from precomputed node reaches.
pub fn opponent_reaches<T: Scalar>(tree: &GameTree<T>, reach: &[Reach<T>]) -> Vec<T> {
    tree.infosets
        .iter()
        .map(|info| info.members.iter().map(|&h| reach[h].external(info.player)).sum())
        .collect()
}

/// μ_{p(s)}(σ(s)) for every infoset; identical across members by perfect recall.
pub fn own_reaches<T: Scalar>(tree: &GameTree<T>, reach: &[Reach<T>]) -> Vec<T> {
    tree.infosets
        .iter()
        .map(|info| reach[info.members[0]].player[info.player.index()])
        .collect()
}

/// Player one's value at every node with the bidilated regularizer folded in:
/// terminals give U₁, player-one nodes add −τψ, player-two nodes add +τψ.
pub fn augmented_values<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    tau: T,
    spec: &RegularizerSpec<T>,
) -> Vec<T> {
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
            NodeKind::Decision(p) => {
                let s = node.infoset.expect("decision infoset");
                let pi = profile.get(s);
                let cont: T = node.actions.iter().zip(pi).map(|(e, &x)| x * value[e.child]).sum();
                if tau == T::zero() {
                    cont
                } else {
                    cont - p.sign::<T>() * tau * spec.local(s).value(pi)
                }
            }
        };
    }
    value
}

/// Σ over own infosets below (s, a) of own-reach-weighted ψ: the dilated continuation C(s, a).
fn dilated_continuation<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    spec: &RegularizerSpec<T>,
) -> Vec<Vec<T>> {
    let n = tree.num_infosets();
    let mut subtree = vec![T::zero(); n];
    let mut cont: Vec<Vec<T>> = vec![Vec::new(); n];
    for s in (0..n).rev() {
        let info = &tree.infosets[s];
        let pi = profile.get(s);
        cont[s] = info
            .children
            .iter()
            .map(|kids| kids.iter().map(|&c| subtree[c]).sum())
            .collect();
        let below: T = pi.iter().zip(&cont[s]).map(|(&x, &c)| x * c).sum();
        subtree[s] = spec.local(s).value(pi) + below;
    }
    cont
}

/// Exact feedback of the requested kind for every infoset, τ-augmented with the bidilated terms.
pub fn compute_feedback<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    kind: FeedbackKind,
    tau: T,
    spec: &RegularizerSpec<T>,
) -> Result<FeedbackBundle<T>> {
    compute_feedback_with(tree, profile, kind, tau, spec, Augmentation::Bidilated)
}

/// As [`compute_feedback`], choosing how the regularizer is folded in.
pub fn compute_feedback_with<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    kind: FeedbackKind,
    tau: T,
    spec: &RegularizerSpec<T>,
    augmentation: Augmentation,
) -> Result<FeedbackBundle<T>> {
    profile.check_dims(tree)?;
    let reach = reach_probabilities(tree, profile);
    let (values, continuation) = match augmentation {
        Augmentation::Bidilated => (augmented_values(tree, profile, tau, spec), None),
        Augmentation::Dilated => (
            augmented_values(tree, profile, T::zero(), spec),
            Some(dilated_continuation(tree, profile, spec)),
        ),
    };
    let opp_reach = opponent_reaches(tree, &reach);
    let own_reach = own_reaches(tree, &reach);

    let n = tree.num_infosets();
    let mut cf = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for s in 0..n {
        let info = &tree.infosets[s];
        let p = info.player;
        let sign = p.sign::<T>();
        let mut row = vec![T::zero(); info.num_actions()];
        for &h in &info.members {
            let w = reach[h].external(p);
            for (a, e) in tree.nodes[h].actions.iter().enumerate() {
                row[a] += w * sign * values[e.child];
            }
        }
        if let Some(cont) = &continuation {
            for (r, &c) in row.iter_mut().zip(&cont[s]) {
                *r -= tau * c;
            }
        }
        let ms = match kind {
            FeedbackKind::CounterfactualValue => T::one(),
            FeedbackKind::QValue => {
                if !(opp_reach[s] > T::zero()) {
                    return Err(Error::Precondition(format!("zero opponent reach at infoset {s}")));
                }
                opp_reach[s]
            }
            FeedbackKind::TrajectoryQValue => {
                if !(own_reach[s] > T::zero()) {
                    return Err(Error::Precondition(format!("zero own reach at infoset {s}")));
                }
                T::one() / own_reach[s]
            }
        };
        q.push(row.iter().map(|&c| c / ms).collect());
        cf.push(row);
        m.push(ms);
    }
    Ok(FeedbackBundle {
        kind,
        q,
        m,
        cf,
        opp_reach,
        own_reach,
        tau,
        augmented: tau != T::zero(),
        root_value: values[tree.root],
    })
}

/// One step of a sampled play.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub node: usize,
    pub action: usize,
    /// Acting player, `None` at chance nodes.
    pub player: Option<Player>,
    pub infoset: Option<usize>,
}

/// A root-to-terminal play.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub steps: Vec<Step>,
    pub terminal: usize,
    /// Terminal utility for player one and player two.
    pub utility: [T; 2],
}

impl<T: Scalar> Trajectory<T> {
    pub fn visited_infosets(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|st| st.infoset)
    }
}

/// Index drawn from `probs` with one uniform variate.
pub(crate) fn sample_index<T: Scalar, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Samples a play where every decision uses `policy(infoset)` and chance its own distribution.
pub fn sample_trajectory_with<T: Scalar, R: Rng + ?Sized>(
    tree: &GameTree<T>,
    rng: &mut R,
    mut policy: impl FnMut(usize) -> Vec<T>,
) -> Trajectory<T> {
    let mut steps = Vec::new();
    let mut h = tree.root;
    loop {
        let node = &tree.nodes[h];
        match node.kind {
            NodeKind::Terminal => {
                let u = node.utility_p1.unwrap_or_else(T::zero);
                return Trajectory {
                    steps,
                    terminal: h,
                    utility: [u, -u],
                };
            }
            NodeKind::Chance => {
                let probs: Vec<T> = node.actions.iter().map(|e| e.prob.unwrap_or_else(T::zero)).collect();
                let a = sample_index(&probs, rng);
                steps.push(Step {
                    node: h,
                    action: a,
                    player: None,
                    infoset: None,
                });
                h = node.actions[a].child;
            }
            NodeKind::Decision(p) => {
                let s = node.infoset.expect("decision infoset");
                let a = sample_index(&policy(s), rng);
                steps.push(Step {
                    node: h,
                    action: a,
                    player: Some(p),
                    infoset: Some(s),
                });
                h = node.actions[a].child;
            }
        }
    }
}

/// Samples a play from the profile.
pub fn sample_trajectory<T: Scalar, R: Rng + ?Sized>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    rng: &mut R,
) -> Trajectory<T> {
    sample_trajectory_with(tree, rng, |s| profile.get(s).to_vec())
}

/// Estimated value at one visited infoset: only the taken action is nonzero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledValue<T> {
    pub infoset: usize,
    pub player: Player,
    pub action: usize,
    pub value: T,
}

/// Sparse estimate over the visited infosets, in backward trajectory order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFeedback<T> {
    pub entries: Vec<SampledValue<T>>,
}

impl<T: Scalar> SampledFeedback<T> {
    /// The one-hot estimate vector of an entry.
    pub fn vector(&self, entry: &SampledValue<T>, num_actions: usize) -> Vec<T> {
        let mut v = vec![T::zero(); num_actions];
        v[entry.action] = entry.value;
        v
    }
}

fn check_taken_probability<T: Scalar>(pi: T, s: usize) -> Result<()> {
    if !(pi > T::zero()) {
        return Err(Error::Invariant(format!("sampled action at infoset {s} has probability {pi}")));
    }
    Ok(())
}

/// Unbiased single-trajectory estimate of the τ-augmented trajectory Q-values.
///
/// Walking backward, the running sum holds −ψ for later own infosets and +ψ for
/// later opponent infosets; the taken action receives (W + τψ)/π(a|s).
pub fn estimate_trajectory_q<T: Scalar>(
    tree: &GameTree<T>,
    trajectory: &Trajectory<T>,
    profile: &BehavioralProfile<T>,
    tau: T,
    spec: &RegularizerSpec<T>,
) -> Result<SampledFeedback<T>> {
    // Accumulated in player one's orientation; player two sees its negation.
    let mut acc = T::zero();
    let mut entries = Vec::new();
    let u1 = trajectory.utility[0];
    for step in trajectory.steps.iter().rev() {
        let (Some(p), Some(s)) = (step.player, step.infoset) else {
            continue;
        };
        let pi = profile.get(s);
        check_taken_probability(pi[step.action], s)?;
        let sign = p.sign::<T>();
        let value = sign * (u1 + tau * acc) / pi[step.action];
        entries.push(SampledValue {
            infoset: s,
            player: p,
            action: step.action,
            value,
        });
        if tau != T::zero() {
            acc -= sign * spec.local(s).value(pi);
        }
    }
    debug_assert!(tree.nodes[trajectory.terminal].is_terminal());
    Ok(SampledFeedback { entries })
}

/// Estimate for the dilated formulation: only own later infosets contribute, each
/// importance-weighted by 1/μ_{-p}(s') so that the expectation is the own-reach-weighted sum.
pub fn estimate_trajectory_q_dilated<T: Scalar>(
    trajectory: &Trajectory<T>,
    mut policy: impl FnMut(usize) -> Vec<T>,
    mut opponent_weight: impl FnMut(usize) -> T,
    tau: T,
    spec: &RegularizerSpec<T>,
) -> Result<SampledFeedback<T>> {
    let mut acc = [T::zero(); 2];
    let mut entries = Vec::new();
    for step in trajectory.steps.iter().rev() {
        let (Some(p), Some(s)) = (step.player, step.infoset) else {
            continue;
        };
        let pi = policy(s);
        check_taken_probability(pi[step.action], s)?;
        let w = trajectory.utility[p.index()];
        let value = (w - tau * acc[p.index()]) / pi[step.action];
        entries.push(SampledValue {
            infoset: s,
            player: p,
            action: step.action,
            value,
        });
        if tau != T::zero() {
            let weight = opponent_weight(s);
            if !(weight > T::zero()) {
                return Err(Error::Invariant(format!("zero opponent reach at visited infoset {s}")));
            }
            acc[p.index()] += spec.local(s).value(&pi) / weight;
        }
    }
    Ok(SampledFeedback { entries })
}

/// The multipliers m_s of `kind` at `profile`, without computing any values.
pub fn feedback_multipliers<T: Scalar>(
    tree: &GameTree<T>,
    profile: &BehavioralProfile<T>,
    kind: FeedbackKind,
) -> Vec<T> {
    match kind {
        FeedbackKind::CounterfactualValue => vec![T::one(); tree.num_infosets()],
        FeedbackKind::QValue => opponent_reaches(tree, &reach_probabilities(tree, profile)),
        FeedbackKind::TrajectoryQValue => own_reaches(tree, &reach_probabilities(tree, profile))
            .into_iter()
            .map(|r| T::one() / r)
            .collect(),
    }
}
