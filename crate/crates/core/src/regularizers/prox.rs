use super::simplex::{floored_normalize, project_truncated_simplex, PerturbedSimplex};
use super::Family;
use crate::error::{Error, Result};
use crate::scalar::{argmax, Scalar};

const LOG_CLIP: f64 = 1e-300;

fn check_len<T>(x0: &[T], g: &[T], simplex: &PerturbedSimplex<T>) -> Result<()> {
    if x0.len() != g.len() || g.len() != simplex.nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "center {}, gradient {}, simplex {}",
            x0.len(),
            g.len(),
            simplex.nu.len()
        )));
    }
    Ok(())
}

/// argmin_{x ∈ Δ^{γ,ν}} ⟨x, g⟩ + τ₀ψ(x) + (1/η) D_ψ(x, x⁰) for ψ = α · negative entropy.
pub fn prox_entropy<T: Scalar>(
    x0: &[T],
    g: &[T],
    tau0: T,
    eta: T,
    alpha: T,
    simplex: &PerturbedSimplex<T>,
) -> Result<Vec<T>> {
    check_len(x0, g, simplex)?;
    let shrink = T::one() + eta * tau0;
    let clip = T::lit(LOG_CLIP).max(T::min_positive_value());
    let log_weights: Vec<T> = x0
        .iter()
        .zip(g)
        .map(|(&x, &ga)| x.max(clip).ln() / shrink - eta * ga / (alpha * shrink))
        .collect();
    floored_normalize(&log_weights, simplex)
}

/// Same objective with ψ = (α/2)‖x‖²: a shrunk gradient step followed by projection.
pub fn prox_euclidean<T: Scalar>(
    x0: &[T],
    g: &[T],
    tau0: T,
    eta: T,
    alpha: T,
    simplex: &PerturbedSimplex<T>,
) -> Result<Vec<T>> {
    check_len(x0, g, simplex)?;
    let shrink = T::one() + eta * tau0;
    let z: Vec<T> = x0
        .iter()
        .zip(g)
        .map(|(&x, &ga)| x / shrink - eta * ga / (alpha * shrink))
        .collect();
    project_truncated_simplex(&z, simplex)
}

/// Dispatches on the regularizer family.
pub fn prox<T: Scalar>(
    family: Family,
    x0: &[T],
    g: &[T],
    tau0: T,
    eta: T,
    alpha: T,
    simplex: &PerturbedSimplex<T>,
) -> Result<Vec<T>> {
    match family {
        Family::Entropy => prox_entropy(x0, g, tau0, eta, alpha, simplex),
        Family::Euclidean => prox_euclidean(x0, g, tau0, eta, alpha, simplex),
    }
}

/// argmax_{x ∈ Δ^{γ,ν}} ⟨q, x⟩ − τ₀ψ(x).
pub fn argmax_regularized<T: Scalar>(
    q: &[T],
    tau0: T,
    alpha: T,
    family: Family,
    simplex: &PerturbedSimplex<T>,
) -> Result<Vec<T>> {
    if q.len() != simplex.nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a simplex over {} actions",
            q.len(),
            simplex.nu.len()
        )));
    }
    simplex.check()?;
    if tau0 <= T::zero() {
        let mut x: Vec<T> = (0..q.len()).map(|a| simplex.floor(a)).collect();
        x[argmax(q)] += T::one() - simplex.floor_mass();
        return Ok(x);
    }
    let scale = alpha * tau0;
    match family {
        Family::Entropy => {
            let lw: Vec<T> = q.iter().map(|&v| v / scale).collect();
            floored_normalize(&lw, simplex)
        }
        Family::Euclidean => {
            let z: Vec<T> = q.iter().map(|&v| v / scale).collect();
            project_truncated_simplex(&z, simplex)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_identity_prox() {
        let s = PerturbedSimplex::<f64>::unconstrained(3);
        let x0 = [0.2, 0.3, 0.5];
        let x = prox_entropy(&x0, &[0.0; 3], 0.0, 0.5, 1.0, &s).unwrap();
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn entropy_softmax_reweighting() {
        let s = PerturbedSimplex::<f64>::unconstrained(2);
        let x = prox_entropy(&[0.5, 0.5], &[1.0, 0.0], 0.0, 2.0, 1.0, &s).unwrap();
        let w = (-2.0f64).exp();
        assert!((x[0] - w / (1.0 + w)).abs() < 1e-15);
    }

    #[test]
    fn euclidean_large_tau_shrinks_to_projection_of_origin() {
        let s = PerturbedSimplex::<f64>::new(0.1, vec![0.5, 0.3, 0.2]).unwrap();
        let x = prox_euclidean(&[0.8, 0.1, 0.1], &[0.0; 3], 1e6, 1.0, 1.0, &s).unwrap();
        // Projection of the origin: uniform, since 1/3 clears every floor.
        for &v in &x {
            assert!((v - 1.0 / 3.0).abs() < 1e-4, "{x:?}");
        }
    }

    #[test]
    fn argmax_vertex_with_floors() {
        let s = PerturbedSimplex::<f64>::new(0.3, vec![0.5, 0.5]).unwrap();
        let x = argmax_regularized(&[1.0, 2.0], 0.0, 1.0, Family::Entropy, &s).unwrap();
        assert!((x[0] - 0.15).abs() < 1e-15 && (x[1] - 0.85).abs() < 1e-15);
        let u = PerturbedSimplex::<f64>::unconstrained(3);
        let x = argmax_regularized(&[1.0, 1.0, 0.0], 0.0, 1.0, Family::Euclidean, &u).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }
}
