mod common;

use common::*;
use proptest::prelude::*;
use qfr::regularizers::{argmax_regularized, project_truncated_simplex, prox, Family, Local, PerturbedSimplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest violation of the projection optimality conditions x = max(z − λ, floor), Σx = 1.
fn projection_kkt_residual(z: &[f64], x: &[f64], simplex: &PerturbedSimplex<f64>) -> f64 {
    let free: Vec<usize> = (0..x.len()).filter(|&a| x[a] > simplex.floor(a) + 1e-12).collect();
    let lambda = if free.is_empty() {
        // Every coordinate at its floor: any λ with z_a − λ ≤ floor_a works.
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

#[test]
fn projection_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let n = rng.gen_range(1..=8);
        let simplex = random_simplex(n, &mut rng);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = project_truncated_simplex(&z, &simplex).unwrap();
        assert!(projection_kkt_residual(&z, &x, &simplex) <= 1e-9, "{z:?} -> {x:?}");
    }
}

#[test]
fn prox_beats_lattice_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..24 {
        let family = if i % 2 == 0 { Family::Entropy } else { Family::Euclidean };
        let n = rng.gen_range(2..=5);
        let simplex = random_simplex(n, &mut rng);
        let x0 = random_interior(&simplex, &mut rng);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let tau0 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) };
        let eta = rng.gen_range(0.05..2.0);
        let alpha = rng.gen_range(0.5..2.0);
        let x = prox(family, &x0, &g, tau0, eta, alpha, &simplex).unwrap();
        assert!(simplex.contains(&x, 1e-12));
        let ours = prox_objective(family, alpha, &x, &x0, &g, tau0, eta);
        let mut best = f64::INFINITY;
        for_each_lattice_point(&simplex, 20_000, |p| {
            best = best.min(prox_objective(family, alpha, p, &x0, &g, tau0, eta));
        });
        assert!(best - ours >= -1e-9, "{family}: prox {ours} vs grid {best}");
    }
}

#[test]
fn entropy_prox_closed_form_unconstrained() {
    // Without floors the entropic prox is x ∝ x0^{1/(1+ητ₀)} exp(−ηg/(α(1+ητ₀))).
    let simplex = PerturbedSimplex::<f64>::unconstrained(3);
    let (x0, g, tau0, eta, alpha) = ([0.2, 0.5, 0.3], [0.3, -1.0, 0.4], 0.7, 0.9, 1.3);
    let x = prox(Family::Entropy, &x0, &g, tau0, eta, alpha, &simplex).unwrap();
    let s = 1.0 + eta * tau0;
    let w: Vec<f64> = (0..3)
        .map(|a| x0[a].powf(1.0 / s) * (-eta * g[a] / (alpha * s)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for a in 0..3 {
        assert!((x[a] - w[a] / total).abs() < 1e-14);
    }
}

#[test]
fn regularized_argmax_maximizes_over_lattice() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let family = if i % 2 == 0 { Family::Entropy } else { Family::Euclidean };
        let n = rng.gen_range(2..=4);
        let simplex = random_simplex(n, &mut rng);
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tau0 = rng.gen_range(0.0..0.5);
        let local = Local::new(family, 1.0);
        let objective = |x: &[f64]| -> f64 { q.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - tau0 * local.value(x) };
        let x = argmax_regularized(&q, tau0, 1.0, family, &simplex).unwrap();
        let mut best = f64::NEG_INFINITY;
        for_each_lattice_point(&simplex, 20_000, |p| best = best.max(objective(p)));
        assert!(objective(&x) - best >= -1e-9);
    }
}

#[test]
fn singleton_simplex_pins_the_prox() {
    let simplex = PerturbedSimplex::<f64>::new(1.0, vec![0.25, 0.75]).unwrap();
    for family in [Family::Entropy, Family::Euclidean] {
        let x = prox(family, &[0.25, 0.75], &[5.0, -5.0], 0.1, 10.0, 1.0, &simplex).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-12 && (x[1] - 0.75).abs() < 1e-12);
    }
}

fn simplex_strategy() -> impl Strategy<Value = (PerturbedSimplex<f64>, Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.05f64..1.0, n),
            0.0f64..0.9,
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
        )
            .prop_map(|(nu, gamma, w, g)| {
                let total: f64 = nu.iter().sum();
                let simplex = PerturbedSimplex::new(gamma, nu.iter().map(|v| v / total).collect()).unwrap();
                let wt: f64 = w.iter().sum();
                let free = 1.0 - simplex.floor_mass();
                let x0 = (0..w.len()).map(|a| simplex.floor(a) + free * w[a] / wt).collect();
                (simplex, x0, g)
            })
    })
}

proptest! {
    #[test]
    fn prox_output_is_feasible((simplex, x0, g) in simplex_strategy(), tau0 in 0.0f64..2.0, eta in 1e-4f64..10.0) {
        for family in [Family::Entropy, Family::Euclidean] {
            let x = prox(family, &x0, &g, tau0, eta, 1.0, &simplex).unwrap();
            prop_assert!(simplex.contains(&x, 1e-12), "{family} {x:?}");
        }
    }

    #[test]
    fn projection_is_idempotent((simplex, x0, g) in simplex_strategy()) {
        let z: Vec<f64> = x0.iter().zip(&g).map(|(a, b)| a + b).collect();
        let x = project_truncated_simplex(&z, &simplex).unwrap();
        let y = project_truncated_simplex(&x, &simplex).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_step_keeps_the_center((simplex, x0, g) in simplex_strategy()) {
        for family in [Family::Entropy, Family::Euclidean] {
            let x = prox(family, &x0, &g, 0.0, 1e-12, 1.0, &simplex).unwrap();
            for (a, b) in x.iter().zip(&x0) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
