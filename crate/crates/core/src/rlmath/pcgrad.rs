//! Gradient surgery for conflicting multi-task gradients.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RlMathError;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects each task gradient off the conflicting directions of the others.
///
/// For every gradient `g_i`, the other tasks are visited in an order drawn
/// from `seed`; whenever the evolving `g_i` conflicts with an original
/// `g_j` (negative dot product), the component along `g_j` is removed:
/// `g_i <- g_i - (g_i . g_j / |g_j|^2) g_j`. Zero-norm opponents are
/// skipped. Gradients that never conflict come back bit-identical.
pub fn pcgrad(grads: &[Vec<f64>], seed: u64) -> Result<Vec<Vec<f64>>, RlMathError> {
    if grads.len() < 2 {
        return Err(RlMathError::TooFewTasks(grads.len()));
    }
    let dim = grads[0].len();
    for (index, grad) in grads.iter().enumerate() {
        if grad.len() != dim {
            return Err(RlMathError::GradientDimensionMismatch {
                index,
                expected: dim,
                found: grad.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut projected = Vec::with_capacity(grads.len());
    for i in 0..grads.len() {
        let mut order: Vec<usize> = (0..grads.len()).filter(|&j| j != i).collect();
        order.shuffle(&mut rng);
        let mut g = grads[i].clone();
        for j in order {
            let opponent = &grads[j];
            let conflict = dot(&g, opponent);
            if conflict >= 0.0 {
                continue;
            }
            let norm_sq = dot(opponent, opponent);
            if norm_sq == 0.0 {
                continue;
            }
            let scale = conflict / norm_sq;
            for (g_k, &o_k) in g.iter_mut().zip(opponent) {
                *g_k -= scale * o_k;
            }
        }
        projected.push(g);
    }
    Ok(projected)
}
