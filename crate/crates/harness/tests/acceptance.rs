#[path = "../../core/tests/common/mod.rs"]
#[allow(dead_code)]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use qfr::eval::exploitability;
use qfr::game::{
    bilinear_utility, build_kuhn, build_leduc, expected_utility, payoff_entries, to_sequence_form, BehavioralProfile,
    GameTree, NodeKind, Player, KUHN_CHIP_SCALE,
};
use qfr::regularizers::{bregman_tree, bregman_tree_direct, project_truncated_simplex, prox, Family, PerturbedSimplex, RegularizerSpec};
use qfr::solvers::{
    game_constants, lazy_flush, lazy_qfr_eager_step, lazy_qfr_step, Algorithm, ConstantsConfig, MonitorSummary, NuChoice,
    Solver, SolverParams, SolverState,
};
use qfr::values::{compute_feedback, estimate_trajectory_q, sample_trajectory, FeedbackKind};
use qfr_harness::{run_on, RunConfig, RunOutput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ETA_GRID: [f64; 4] = [0.1, 0.01, 0.001, 0.0001];

struct Outcome {
    pass: bool,
    detail: String,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn feedback_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut relation, mut oracle_err, mut bregman, mut bilinear) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut profiles = 0;
    for tree in [build_kuhn::<f64>(), build_leduc()] {
        let entries = payoff_entries(&tree);
        for i in 0..50 {
            profiles += 1;
            let profile = random_profile(&tree, &mut rng);
            let family = if i % 2 == 0 { Family::Entropy } else { Family::Euclidean };
            let spec = RegularizerSpec::uniform(family, tree.num_infosets());
            let tau = if i % 3 == 0 { 0.0 } else { 0.01 };
            let oracle = feedback_oracle(&tree, &profile, tau, &spec);
            for kind in FeedbackKind::ALL {
                let fb = compute_feedback(&tree, &profile, kind, tau, &spec).unwrap();
                relation = relation.max(fb.relation_residual());
                for s in 0..tree.num_infosets() {
                    for a in 0..fb.cf[s].len() {
                        oracle_err = oracle_err.max(rel(fb.cf[s][a], oracle.cf[s][a]));
                    }
                }
            }
            let other = random_profile(&tree, &mut rng);
            for p in Player::BOTH {
                let mu = to_sequence_form(&tree, &profile, p).unwrap();
                let nu = to_sequence_form(&tree, &other, p).unwrap();
                let d1 = bregman_tree(&tree, &mu, &nu, &spec).unwrap();
                let d2 = bregman_tree_direct(&tree, &mu, &nu, &spec).unwrap();
                bregman = bregman.max((d1 - d2).abs());
            }
            let mu1 = to_sequence_form(&tree, &profile, Player::One).unwrap();
            let mu2 = to_sequence_form(&tree, &profile, Player::Two).unwrap();
            let b = bilinear_utility(&entries, &mu1, &mu2);
            bilinear = bilinear
                .max((b - expected_utility(&tree, &profile)).abs())
                .max((b - path_utility(&tree, &profile)).abs());
        }
    }
    Outcome {
        pass: relation <= 1e-12 && oracle_err <= 1e-10 && bregman <= 1e-9 && bilinear <= 1e-12,
        detail: format!(
            "{profiles} profiles; cf-m*q {relation:.1e}, cf vs path oracle {oracle_err:.1e}, bregman paths {bregman:.1e}, bilinear {bilinear:.1e}"
        ),
    }
}

fn projection_kkt_residual(z: &[f64], x: &[f64], simplex: &PerturbedSimplex<f64>) -> f64 {
    let free: Vec<usize> = (0..x.len()).filter(|&a| x[a] > simplex.floor(a) + 1e-12).collect();
    let lambda = if free.is_empty() {
        (0..x.len()).map(|a| z[a] - simplex.floor(a)).fold(f64::NEG_INFINITY, f64::max)
    } else {
        free.iter().map(|&a| z[a] - x[a]).sum::<f64>() / free.len() as f64
    };
    let mut worst = (x.iter().sum::<f64>() - 1.0).abs();
    for a in 0..x.len() {
        worst = worst.max((simplex.floor(a) - x[a]).max(0.0));
        if free.contains(&a) {
            worst = worst.max((z[a] - lambda - x[a]).abs());
        } else {
            worst = worst.max((z[a] - lambda - simplex.floor(a)).max(0.0));
        }
    }
    worst
}

fn prox_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_margin, mut worst_kkt, mut min_points) = (f64::INFINITY, 0.0f64, usize::MAX);
    for i in 0..200 {
        let family = if i % 2 == 0 { Family::Entropy } else { Family::Euclidean };
        let n = rng.gen_range(2..=6);
        let nu: Vec<f64> = (0..n).map(|_| 0.1 + rng.gen::<f64>()).collect();
        let total: f64 = nu.iter().sum();
        let simplex = PerturbedSimplex::new(rng.gen_range(0.0..=0.3), nu.iter().map(|v| v / total).collect()).unwrap();
        let x0 = random_interior(&simplex, &mut rng);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let tau0 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) };
        let eta = rng.gen_range(0.05..2.0);
        let alpha = rng.gen_range(0.5..2.0);
        let x = prox(family, &x0, &g, tau0, eta, alpha, &simplex).unwrap();
        let ours = prox_objective(family, alpha, &x, &x0, &g, tau0, eta);
        let mut best = f64::INFINITY;
        let points = for_each_lattice_point(&simplex, 1_000_000, |p| {
            best = best.min(prox_objective(family, alpha, p, &x0, &g, tau0, eta));
        });
        min_points = min_points.min(points);
        worst_margin = worst_margin.min(best - ours);
        if !simplex.contains(&x, 1e-12) {
            worst_margin = f64::NEG_INFINITY;
        }

        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p = project_truncated_simplex(&z, &simplex).unwrap();
        worst_kkt = worst_kkt.max(projection_kkt_residual(&z, &p, &simplex));
    }
    Outcome {
        pass: worst_margin >= -1e-6 && worst_kkt <= 1e-9,
        detail: format!(
            "200 instances, grids of {min_points}..1e6 points; worst grid margin {worst_margin:.2e}, projection KKT {worst_kkt:.1e}"
        ),
    }
}

fn estimator_unbiasedness() -> Outcome {
    let tree = build_kuhn::<f64>();
    let profile = BehavioralProfile::uniform(&tree);
    let spec = RegularizerSpec::uniform(Family::Entropy, tree.num_infosets());
    let samples = 200_000;
    let mut worst_z = 0.0f64;
    let mut checked = 0;
    for (tau, seed) in [(0.0, 301), (0.01, 302)] {
        let oracle = feedback_oracle(&tree, &profile, tau, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = tree.num_infosets();
        let mut sum: Vec<Vec<f64>> = (0..n).map(|s| vec![0.0; tree.infosets[s].num_actions()]).collect();
        let mut sq = sum.clone();
        for _ in 0..samples {
            let traj = sample_trajectory(&tree, &profile, &mut rng);
            for e in estimate_trajectory_q(&tree, &traj, &profile, tau, &spec).unwrap().entries {
                sum[e.infoset][e.action] += e.value;
                sq[e.infoset][e.action] += e.value * e.value;
            }
        }
        for s in 0..n {
            for a in 0..sum[s].len() {
                let mean = sum[s][a] / samples as f64;
                let se = ((sq[s][a] / samples as f64 - mean * mean) / samples as f64).sqrt();
                let exact = oracle.cf[s][a] * oracle.own[s];
                let z = if se > 0.0 { (mean - exact).abs() / se } else if (mean - exact).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
                worst_z = worst_z.max(z);
                checked += 1;
            }
        }
    }
    Outcome {
        pass: worst_z <= 4.0,
        detail: format!("{checked} (tau, s, a) cells over 2x{samples} trajectories; worst |mean - exact| = {worst_z:.2} SE"),
    }
}

fn cfr_plus_kuhn() -> Outcome {
    let tree = build_kuhn::<f64>();
    let params = SolverParams::new(&tree, FeedbackKind::CounterfactualValue, Family::Entropy).with_average(true);
    let mut solver = Solver::new(&tree, params, Algorithm::CfrPlus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10_000 {
        solver.step(&mut rng).unwrap();
    }
    let avg = solver.average_profile().unwrap();
    let expl = exploitability(&tree, &avg).unwrap();
    let enumerated = enumerated_best_response(&tree, &avg, Player::One) + enumerated_best_response(&tree, &avg, Player::Two);
    let value = expected_utility(&tree, &avg) * KUHN_CHIP_SCALE;
    Outcome {
        pass: expl <= 1e-4 && (expl - enumerated).abs() <= 1e-12 && (value + 1.0 / 18.0).abs() <= 1e-3,
        detail: format!(
            "avg exploitability {expl:.2e} (enumeration {enumerated:.2e}) at 1e4; value {value:.6} chips vs -1/18 = {:.6}",
            -1.0 / 18.0
        ),
    }
}

struct FullInfoCell {
    eta: f64,
    early: f64,
    last: f64,
}

fn full_info_convergence(monitors: &mut Vec<MonitorSummary>) -> Outcome {
    let mut lines = Vec::new();
    let mut pass_by_kind = Vec::new();
    for kind in [FeedbackKind::QValue, FeedbackKind::CounterfactualValue, FeedbackKind::TrajectoryQValue] {
        let mut kind_pass = true;
        for (name, tree) in [("kuhn", build_kuhn::<f64>()), ("leduc", build_leduc())] {
            let cells: Vec<FullInfoCell> = ETA_GRID
                .iter()
                .map(|&eta| {
                    let out = run_on(
                        &tree,
                        &RunConfig {
                            algo: Algorithm::Qfr,
                            feedback: kind,
                            reg: Family::Entropy,
                            eta,
                            tau: 0.001,
                            gamma: 0.001,
                            iters: 10_000,
                            checkpoints: Some(vec![10, 10_000]),
                            wall: false,
                            ..RunConfig::default()
                        },
                    )
                    .unwrap();
                    monitors.extend(out.monitor());
                    let s = &out.series[0];
                    FullInfoCell {
                        eta,
                        early: s.at(10).unwrap().exploitability_last,
                        last: s.at(10_000).unwrap().exploitability_last,
                    }
                })
                .collect();
            let best = cells
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.last.total_cmp(&b.1.last).then(a.0.cmp(&b.0)))
                .unwrap()
                .1;
            let ratio = best.last / best.early;
            kind_pass &= ratio <= 0.1;
            lines.push(format!("{kind}/{name} eta={} ratio {ratio:.3}", best.eta));
        }
        pass_by_kind.push((kind, kind_pass));
    }
    let passing: Vec<String> = pass_by_kind.iter().filter(|(_, p)| *p).map(|(k, _)| k.to_string()).collect();
    Outcome {
        pass: !passing.is_empty(),
        detail: format!("kinds meeting 10x on both games: [{}]; {}", passing.join(","), lines.join(", ")),
    }
}

fn stochastic_convergence(monitors: &mut Vec<MonitorSummary>) -> Outcome {
    let tree = build_kuhn::<f64>();
    let mut runs: Vec<RunOutput> = Vec::new();
    for &eta in &ETA_GRID {
        let out = run_on(
            &tree,
            &RunConfig {
                algo: Algorithm::QfrStoch,
                feedback: FeedbackKind::TrajectoryQValue,
                reg: Family::Entropy,
                eta,
                tau: 0.001,
                gamma: 0.01,
                iters: 100_000,
                eval_every: 100,
                reps: 20,
                reference: true,
                wall: false,
                ..RunConfig::default()
            },
        )
        .unwrap();
        monitors.extend(out.monitor());
        runs.push(out);
    }
    let chosen = (0..runs.len())
        .min_by(|&a, &b| {
            runs[a]
                .mean_final_exploitability()
                .total_cmp(&runs[b].mean_final_exploitability())
                .then(a.cmp(&b))
        })
        .unwrap();
    let out = &runs[chosen];
    let gap = median(out.series.iter().map(|s| s.best_until(100_000, |r| r.reg_gap).unwrap()).collect());
    let bregman: Vec<f64> = [1000, 10_000, 100_000]
        .iter()
        .map(|&t| median(out.series.iter().map(|s| s.best_until(t, |r| r.bregman_ref).unwrap()).collect()))
        .collect();
    let monotone = bregman.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        pass: gap <= 0.05 && monotone,
        detail: format!(
            "eta={} by grid; median best gap at 1e5 {gap:.4}; median best Bregman at 1e3/1e4/1e5 {:.4}/{:.4}/{:.4}",
            ETA_GRID[chosen], bregman[0], bregman[1], bregman[2]
        ),
    }
}

fn m_bounds(monitors: &[MonitorSummary]) -> Outcome {
    let observations: usize = monitors.iter().map(|m| m.observations).sum();
    let hard: usize = monitors.iter().map(|m| m.hard).sum();
    let soft: usize = monitors.iter().map(|m| m.soft).sum();
    Outcome {
        pass: hard == 0 && observations > 0,
        detail: format!("{} runs, {observations} multipliers observed, {hard} hard and {soft} soft violations", monitors.len()),
    }
}

fn lazy_equivalence() -> Outcome {
    let tree = build_kuhn::<f64>();
    let mut runs = 0;
    let mut mismatches = 0;
    for family in [Family::Entropy, Family::Euclidean] {
        for (tau, gamma) in [(0.01, 0.01), (0.001, 0.1), (0.0, 0.01)] {
            for seed in 0..3u64 {
                runs += 1;
                let params = SolverParams::new(&tree, FeedbackKind::TrajectoryQValue, family)
                    .with_tau(tau)
                    .with_uniform_eta(0.1)
                    .with_perturbation(&tree, gamma, NuChoice::Leaves)
                    .unwrap();
                let mut lazy = SolverState::new(&tree, &params).unwrap();
                let mut eager = lazy.clone();
                let (mut r1, mut r2) = (ChaCha8Rng::seed_from_u64(seed), ChaCha8Rng::seed_from_u64(seed));
                for _ in 0..1000 {
                    lazy_qfr_step(&mut lazy, &tree, &params, &mut r1).unwrap();
                    lazy_qfr_eager_step(&mut eager, &tree, &params, &mut r2).unwrap();
                    let mut flushed = lazy.clone();
                    lazy_flush(&mut flushed, &tree, &params).unwrap();
                    if flushed.current != eager.current || flushed.center != eager.center {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{runs} runs x 1000 steps, {mismatches} steps differing bitwise"),
    }
}

/// Σ_{h∈s} product of chance probabilities on the path to h, by forward propagation.
fn chance_mass_oracle(tree: &GameTree<f64>) -> Vec<f64> {
    let mut reach = vec![0.0; tree.num_nodes()];
    reach[tree.root] = 1.0;
    for (h, node) in tree.nodes.iter().enumerate() {
        for e in &node.actions {
            let p = if node.kind == NodeKind::Chance { e.prob.unwrap() } else { 1.0 };
            reach[e.child] = reach[h] * p;
        }
    }
    tree.infosets.iter().map(|i| i.members.iter().map(|&h| reach[h]).sum()).collect()
}

fn constants_table() -> Outcome {
    let tree = build_kuhn::<f64>();
    let gamma0: f64 = 0.1;
    // Kuhn: each player acts at most twice on a path, 12 infosets.
    let gamma = gamma0.powi(2) / 12.0;
    let min_mass = chance_mass_oracle(&tree).into_iter().fold(f64::INFINITY, f64::min);
    let c = |kind| game_constants(&tree, &ConstantsConfig::new(kind, Family::Entropy, 0.1, gamma0)).unwrap();
    let tq = c(FeedbackKind::TrajectoryQValue);
    let cf = c(FeedbackKind::CounterfactualValue);
    let q = c(FeedbackKind::QValue);
    let ok_tq = rel(tq.m2, 1.0 / gamma) <= 1e-12;
    let ok_cf = cf.m1 == 1.0 && cf.m2 == 1.0;
    let ok_q = rel(q.m1, gamma * min_mass) <= 1e-12;
    Outcome {
        pass: ok_tq && ok_cf && ok_q,
        detail: format!(
            "TQ M2 {} vs 1/gamma {}; CF M1 {} M2 {}; Q M1 {:.6e} vs gamma*min mass {:.6e}",
            tq.m2,
            1.0 / gamma,
            cf.m1,
            cf.m2,
            q.m1,
            gamma * min_mass
        ),
    }
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut monitors = Vec::new();
    let mut all = true;
    let mut report = |n: usize, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= budget;
        all &= pass;
        println!(
            "criterion {n}: {} ({:.1}s of {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    };
    report(1, Duration::from_secs(10), &mut feedback_identities);
    report(2, Duration::from_secs(60), &mut prox_optimality);
    report(3, Duration::from_secs(120), &mut estimator_unbiasedness);
    report(4, Duration::from_secs(30), &mut cfr_plus_kuhn);
    report(5, Duration::from_secs(600), &mut || full_info_convergence(&mut monitors));
    report(6, Duration::from_secs(1800), &mut || stochastic_convergence(&mut monitors));
    report(7, Duration::from_secs(1), &mut || m_bounds(&monitors));
    report(8, Duration::from_secs(60), &mut lazy_equivalence);
    report(9, Duration::from_secs(1), &mut constants_table);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
