use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{MomentSet, UncertError};

/// Acceptance region for selected output components, in physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Predicate {
    /// Euclidean norm at most `c`.
    NormLe { c: f64 },
    /// Componentwise `lo ≤ x ≤ hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Predicate {
    pub fn holds(&self, x: &[f64]) -> bool {
        match self {
            Predicate::NormLe { c } => x.iter().map(|v| v * v).sum::<f64>().sqrt() <= *c,
            Predicate::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *l <= *v && *v <= *h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RequirementResult {
    /// Fraction of samples satisfying the predicate.
    pub fraction: f64,
    /// Binomial standard error of `fraction`.
    pub std_error: f64,
    pub n: usize,
    /// Distribution the samples were drawn from.
    pub assumption: &'static str,
}

/// Probability that the selected components satisfy `predicate`, estimated
/// by sampling a Gaussian with the propagated mean and covariance.
/// Sample `i` uses stream `i` of a generator keyed by `seed`, so results do
/// not depend on scheduling.
pub fn requirement_check(
    moments: &MomentSet,
    components: &[usize],
    predicate: &Predicate,
    n: usize,
    seed: u64,
) -> Result<RequirementResult, UncertError> {
    if components.is_empty() || n == 0 {
        return Err(UncertError::EmptyCheck);
    }
    let sub = moments.select(components)?;
    let d = components.len();
    if let Predicate::Box { lo, hi } = predicate {
        for len in [lo.len(), hi.len()] {
            if len != d {
                return Err(UncertError::Dimension { expected: d, found: len });
            }
        }
    }
    let mean = DVector::from_vec(sub.mean_physical());
    let cov = sub
        .covariance_physical()
        .unwrap_or_else(|| DMatrix::zeros(d, d));
    let eig = SymmetricEigen::new(cov.clone());
    let scale = cov.diagonal().amax().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(UncertError::NotPsd(min));
    }
    // factor Σ = L Lᵀ with L = Q √Λ, negative round-off clamped to zero
    let sqrt_l = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let l = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_l);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DVector::zeros(d);
    let mut hits = 0usize;
    for i in 0..n {
        rng.set_stream(i as u64);
        rng.set_word_pos(0);
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let x = &mean + &l * &z;
        if predicate.holds(x.as_slice()) {
            hits += 1;
        }
    }
    let p = hits as f64 / n as f64;
    Ok(RequirementResult {
        fraction: p,
        std_error: (p * (1.0 - p) / n as f64).sqrt(),
        n,
        assumption: "gaussian",
    })
}
