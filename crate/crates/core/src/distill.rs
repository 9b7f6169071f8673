//! Distillation math: the two-parameter alpha-beta divergence family and
//! top-K support restriction for teacher-student distribution pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistillError {
    #[error("distribution must not be empty")]
    EmptyDistribution,
    #[error("probability at index {index} is {value}, which is not a finite nonnegative number")]
    BadProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("distributions differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("alpha must be nonzero")]
    ZeroAlpha,
    #[error("beta must be nonzero")]
    ZeroBeta,
    #[error("alpha + beta must be nonzero")]
    ZeroAlphaBetaSum,
    #[error("{side}[{index}] = 0 cannot be raised to the negative exponent {exponent}")]
    ZeroToNegativePower {
        side: &'static str,
        index: usize,
        exponent: f64,
    },
    #[error("top-K size must be at least 1")]
    ZeroK,
    #[error("student has probability 0 on the entire top-K support")]
    ZeroStudentMass,
}

/// A categorical distribution: finite nonnegative entries summing to 1
/// within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CategoricalDist {
    probs: Vec<f64>,
}

impl CategoricalDist {
    pub fn new(probs: Vec<f64>) -> Result<Self, DistillError> {
        if probs.is_empty() {
            return Err(DistillError::EmptyDistribution);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(value >= 0.0) {
                return Err(DistillError::BadProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DistillError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for CategoricalDist {
    type Error = DistillError;

    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl From<CategoricalDist> for Vec<f64> {
    fn from(dist: CategoricalDist) -> Self {
        dist.probs
    }
}

/// Parameters of the alpha-beta divergence. Both parameters and their sum
/// must be nonzero; the exact KL endpoints are reached in the limit (for
/// example alpha = 1, beta = 1e-4 tracks forward KL within a fraction of a
/// percent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbkdParams {
    pub alpha: f64,
    pub beta: f64,
}

impl AbkdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, DistillError> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(DistillError::ZeroAlpha);
        }
        if beta == 0.0 || !beta.is_finite() {
            return Err(DistillError::ZeroBeta);
        }
        if alpha + beta == 0.0 {
            return Err(DistillError::ZeroAlphaBetaSum);
        }
        Ok(Self { alpha, beta })
    }
}

/// Raises a probability to a power under the convention `0^x = 0` for
/// `x > 0`; a zero base with a negative exponent is a domain error.
fn pow_checked(
    value: f64,
    exponent: f64,
    side: &'static str,
    index: usize,
) -> Result<f64, DistillError> {
    if value == 0.0 {
        if exponent < 0.0 {
            return Err(DistillError::ZeroToNegativePower {
                side,
                index,
                exponent,
            });
        }
        return Ok(0.0);
    }
    Ok(value.powf(exponent))
}

/// The alpha-beta divergence
/// `D(p, q) = -(1 / (alpha * beta)) * sum_k [p_k^alpha q_k^beta
///   - alpha/(alpha+beta) p_k^(alpha+beta) - beta/(alpha+beta) q_k^(alpha+beta)]`,
/// evaluated over every aligned index. At `(1, 1)` this is half the squared
/// Euclidean distance; near `(1, 0)` and `(0, 1)` it approaches forward and
/// reverse KL.
pub fn abkd_divergence(
    p: &CategoricalDist,
    q: &CategoricalDist,
    params: &AbkdParams,
) -> Result<f64, DistillError> {
    if p.len() != q.len() {
        return Err(DistillError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let AbkdParams { alpha, beta } = *params;
    let sum_exp = alpha + beta;
    let mut total = 0.0;
    for (index, (&p_k, &q_k)) in p.probs().iter().zip(q.probs()).enumerate() {
        let cross = pow_checked(p_k, alpha, "p", index)? * pow_checked(q_k, beta, "q", index)?;
        let p_term = pow_checked(p_k, sum_exp, "p", index)?;
        let q_term = pow_checked(q_k, sum_exp, "q", index)?;
        total += cross - (alpha / sum_exp) * p_term - (beta / sum_exp) * q_term;
    }
    Ok(-total / (alpha * beta))
}

/// Top-K restriction of a teacher distribution: the kept indices, the
/// teacher renormalized over them, and a projector for student
/// distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKProjection {
    indices: Vec<usize>,
    teacher: CategoricalDist,
    source_len: usize,
}

impl TopKProjection {
    /// Kept vocabulary indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Teacher probabilities renormalized over the kept indices.
    pub fn teacher(&self) -> &CategoricalDist {
        &self.teacher
    }

    /// Restricts a student distribution to the kept indices and
    /// renormalizes it. The student must put positive mass somewhere on the
    /// support.
    pub fn project_student(&self, student: &CategoricalDist) -> Result<CategoricalDist, DistillError> {
        if student.len() != self.source_len {
            return Err(DistillError::LengthMismatch {
                left: student.len(),
                right: self.source_len,
            });
        }
        let restricted: Vec<f64> = self.indices.iter().map(|&k| student.probs()[k]).collect();
        let mass: f64 = restricted.iter().sum();
        if mass <= 0.0 {
            return Err(DistillError::ZeroStudentMass);
        }
        CategoricalDist::new(restricted.iter().map(|v| v / mass).collect())
    }
}

/// Selects the K most probable teacher indices (ties break toward the lower
/// index) and renormalizes the teacher over them. K beyond the vocabulary
/// clamps to the full support.
pub fn topk_mask(teacher: &CategoricalDist, k: usize) -> Result<TopKProjection, DistillError> {
    if k == 0 {
        return Err(DistillError::ZeroK);
    }
    let source_len = teacher.len();
    let k = k.min(source_len);
    let mut order: Vec<usize> = (0..teacher.len()).collect();
    order.sort_by(|&a, &b| {
        teacher.probs()[b]
            .partial_cmp(&teacher.probs()[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut indices: Vec<usize> = order[..k].to_vec();
    indices.sort_unstable();
    let kept: Vec<f64> = indices.iter().map(|&i| teacher.probs()[i]).collect();
    let mass: f64 = kept.iter().sum();
    let teacher = CategoricalDist::new(kept.iter().map(|v| v / mass).collect())?;
    Ok(TopKProjection {
        indices,
        teacher,
        source_len,
    })
}
