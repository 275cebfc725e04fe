use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// Δ^{γ,ν} = { u ∈ Δ : u_a ≥ γ ν_a }.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedSimplex<T> {
    pub gamma: T,
    pub nu: Vec<T>,
}

const FEASIBILITY_TOL: f64 = 1e-12;

impl<T: Scalar> PerturbedSimplex<T> {
    pub fn new(gamma: T, nu: Vec<T>) -> Result<Self> {
        let s = PerturbedSimplex { gamma, nu };
        s.check()?;
        Ok(s)
    }

    /// The plain probability simplex over `n` actions.
    pub fn unconstrained(n: usize) -> Self {
        PerturbedSimplex {
            gamma: T::zero(),
            nu: vec![T::one() / T::from_usize_lossy(n); n],
        }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    #[inline]
    pub fn floor(&self, a: usize) -> T {
        self.gamma * self.nu[a]
    }

    /// γ Σ ν: total mass pinned by the floors.
    pub fn floor_mass(&self) -> T {
        self.gamma * sum(&self.nu)
    }

    pub fn check(&self) -> Result<()> {
        let mass = self.floor_mass().as_f64();
        if !(self.gamma.as_f64() >= 0.0) || mass > 1.0 + FEASIBILITY_TOL {
            return Err(Error::InfeasibleSimplex(mass));
        }
        if self.nu.iter().any(|v| !(v.as_f64() > 0.0)) {
            return Err(Error::Domain("exploration distribution must have full support".into()));
        }
        Ok(())
    }

    /// True when the floors leave no free mass, so the set is the single point γν.
    pub fn is_singleton(&self) -> bool {
        self.floor_mass().as_f64() >= 1.0 - FEASIBILITY_TOL
    }

    /// Membership test with absolute tolerance `tol` on the sum and the floors.
    pub fn contains(&self, x: &[T], tol: f64) -> bool {
        x.len() == self.nu.len()
            && (sum(x).as_f64() - 1.0).abs() <= tol
            && x.iter().enumerate().all(|(a, &v)| v.as_f64() >= self.floor(a).as_f64() - tol)
    }
}

/// Euclidean projection of `z` onto Δ^{γ,ν}.
///
/// Writes x = γν + p and projects z − γν onto { p ≥ 0, Σp = 1 − γΣν } with the
/// sort-and-threshold rule.
pub fn project_truncated_simplex<T: Scalar>(z: &[T], simplex: &PerturbedSimplex<T>) -> Result<Vec<T>> {
    if z.len() != simplex.len() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, simplex {}",
            z.len(),
            simplex.len()
        )));
    }
    simplex.check()?;
    let floors: Vec<T> = (0..z.len()).map(|a| simplex.floor(a)).collect();
    if simplex.is_singleton() {
        return Ok(floors);
    }
    let radius = T::one() - simplex.floor_mass();
    let y: Vec<T> = z.iter().zip(&floors).map(|(&v, &l)| v - l).collect();

    let mut sorted = y.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut prefix = T::zero();
    let mut theta = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - radius) / T::from_usize_lossy(j + 1);
        if u - candidate > T::zero() {
            theta = candidate;
        }
    }
    Ok(y.iter()
        .zip(&floors)
        .map(|(&v, &l)| l + (v - theta).max(T::zero()))
        .collect())
}

/// Solves x_a = max(exp(w_a) / Z, γν_a), Σx = 1 for the normalizer Z.
///
/// The floored coordinates are exactly those with the smallest ratios
/// exp(w_a)/ν_a, so candidates are sorted by that ratio and each prefix is
/// tried as the floored set. Runs in O(n log n).
pub(crate) fn floored_normalize<T: Scalar>(log_weights: &[T], simplex: &PerturbedSimplex<T>) -> Result<Vec<T>> {
    let n = log_weights.len();
    if n != simplex.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} weights for a simplex over {} actions",
            simplex.len()
        )));
    }
    simplex.check()?;
    if simplex.is_singleton() {
        return Ok((0..n).map(|a| simplex.floor(a)).collect());
    }
    let shift = log_weights.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = log_weights.iter().map(|&w| (w - shift).exp()).collect();
    if simplex.gamma == T::zero() {
        let z = sum(&weights);
        return Ok(weights.iter().map(|&w| w / z).collect());
    }

    // Ascending by log(ŵ_a / ν_a); ties keep index order.
    let log_ratio: Vec<T> = (0..n).map(|a| (log_weights[a] - shift) - simplex.nu[a].ln()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        log_ratio[a]
            .partial_cmp(&log_ratio[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut suffix = vec![T::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + weights[order[i]];
    }
    let log_gamma = simplex.gamma.ln();
    let mut floored_nu = T::zero();
    let mut normalizer = None;
    for i in 0..n {
        let free = T::one() - simplex.gamma * floored_nu;
        let z = suffix[i] / free;
        let threshold = log_gamma + z.ln();
        let lower_ok = i == 0 || log_ratio[order[i - 1]] <= threshold;
        let upper_ok = log_ratio[order[i]] >= threshold;
        if lower_ok && upper_ok {
            normalizer = Some(z);
            break;
        }
        floored_nu += simplex.nu[order[i]];
    }
    // Rounding can reject every prefix by a hair; fall back to the best candidate.
    let z = match normalizer {
        Some(z) => z,
        None => fallback_normalizer(&weights, simplex),
    };
    Ok((0..n).map(|a| (weights[a] / z).max(simplex.floor(a))).collect())
}

/// Bisection on the monotone map Z ↦ Σ max(w/Z, γν).
fn fallback_normalizer<T: Scalar>(weights: &[T], simplex: &PerturbedSimplex<T>) -> T {
    let total = |z: T| -> T {
        weights
            .iter()
            .enumerate()
            .map(|(a, &w)| (w / z).max(simplex.floor(a)))
            .sum()
    };
    let mut lo = T::min_positive_value();
    let mut hi = sum(weights).max(T::one()) * T::lit(2.0) / (T::one() - simplex.floor_mass()).max(T::epsilon());
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if total(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
