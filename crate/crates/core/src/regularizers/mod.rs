//! Local and tree-level regularizers, Bregman divergences and proximal operators.

mod dilated;
mod prox;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

pub use dilated::{bidilated_psi, bidilated_weights, bregman_tree, bregman_tree_direct, dilated_psi, dilated_psi_grad};
pub use prox::{argmax_regularized, prox, prox_entropy, prox_euclidean};
pub use simplex::{project_truncated_simplex, PerturbedSimplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Entropy,
    Euclidean,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(Family::Entropy),
            "euclidean" => Ok(Family::Euclidean),
            other => Err(Error::InvalidParameter(format!("unknown regularizer {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Entropy => "entropy",
            Family::Euclidean => "euclidean",
        })
    }
}

/// Regularizer family plus a positive weight α_s per infoset.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizerSpec<T> {
    pub family: Family,
    pub alpha: Vec<T>,
}

impl<T: Scalar> RegularizerSpec<T> {
    /// Weight 1 at every infoset.
    pub fn uniform(family: Family, num_infosets: usize) -> Self {
        RegularizerSpec {
            family,
            alpha: vec![T::one(); num_infosets],
        }
    }

    pub fn new(family: Family, alpha: Vec<T>) -> Result<Self> {
        if let Some(s) = alpha.iter().position(|a| !(a.as_f64() > 0.0)) {
            return Err(Error::InvalidParameter(format!("alpha at infoset {s} must be positive")));
        }
        Ok(RegularizerSpec { family, alpha })
    }

    #[inline]
    pub fn local(&self, s: usize) -> Local<T> {
        Local {
            family: self.family,
            alpha: self.alpha[s],
        }
    }

    pub fn max_alpha(&self) -> T {
        self.alpha.iter().copied().fold(T::zero(), T::max)
    }
}

/// ψ^Δ_s: the regularizer attached to one infoset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Local<T> {
    pub family: Family,
    pub alpha: T,
}

impl<T: Scalar> Local<T> {
    pub fn new(family: Family, alpha: T) -> Self {
        Local { family, alpha }
    }

    /// ψ(x) without domain checks; 0 log 0 is taken as 0.
    pub fn value(&self, x: &[T]) -> T {
        match self.family {
            Family::Entropy => {
                let neg_h: T = x
                    .iter()
                    .filter(|&&v| v > T::zero())
                    .map(|&v| v * v.ln())
                    .sum();
                self.alpha * (T::from_usize_lossy(x.len()).ln() + neg_h)
            }
            Family::Euclidean => self.alpha * dot(x, x) / T::lit(2.0),
        }
    }

    /// ∇ψ(x) without domain checks.
    pub fn gradient_unchecked(&self, x: &[T]) -> Vec<T> {
        match self.family {
            Family::Entropy => x.iter().map(|&v| self.alpha * (T::one() + v.ln())).collect(),
            Family::Euclidean => x.iter().map(|&v| self.alpha * v).collect(),
        }
    }

    /// Largest value of ψ over the simplex.
    pub fn max_value(&self, num_actions: usize) -> T {
        match self.family {
            Family::Entropy => self.alpha * T::from_usize_lossy(num_actions).ln(),
            Family::Euclidean => self.alpha / T::lit(2.0),
        }
    }
}

fn check_nonnegative<T: Scalar>(x: &[T]) -> Result<()> {
    if x.iter().any(|v| !(v.as_f64() >= 0.0)) {
        return Err(Error::Domain(format!("negative or NaN coordinate in {x:?}")));
    }
    Ok(())
}

fn check_positive<T: Scalar>(x: &[T]) -> Result<()> {
    if x.iter().any(|v| !(v.as_f64() > 0.0)) {
        return Err(Error::Domain(format!("entropy needs strictly positive coordinates, got {x:?}")));
    }
    Ok(())
}

/// ψ^Δ(x): α(log|A| + Σ x log x) or (α/2)‖x‖².
pub fn local_psi<T: Scalar>(reg: &Local<T>, x: &[T]) -> Result<T> {
    check_nonnegative(x)?;
    Ok(reg.value(x))
}

/// ∇ψ^Δ(x): α(1 + log x) or αx.
pub fn local_psi_grad<T: Scalar>(reg: &Local<T>, x: &[T]) -> Result<Vec<T>> {
    check_nonnegative(x)?;
    if reg.family == Family::Entropy {
        check_positive(x)?;
    }
    Ok(reg.gradient_unchecked(x))
}

/// D_ψ(x, y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩.
pub fn bregman_local<T: Scalar>(reg: &Local<T>, x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} coordinates", x.len(), y.len())));
    }
    check_nonnegative(x)?;
    let grad = local_psi_grad(reg, y)?;
    let inner: T = grad.iter().zip(x.iter().zip(y)).map(|(&g, (&a, &b))| g * (a - b)).sum();
    Ok(reg.value(x) - reg.value(y) - inner)
}
