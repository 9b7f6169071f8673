//! Divergence-point masking for preference pairs: gradients attach only to
//! the suffix where the chosen and rejected token sequences actually differ.

use serde::Serialize;

use super::RlMathError;

/// Where a preference pair's trajectories split, with per-token masks
/// selecting each sequence's divergent suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivergenceMask {
    /// False when the sequences are identical; the masks are then all false.
    pub diverged: bool,
    /// First index at which the sequences differ, or the shorter length
    /// when one is a prefix of the other.
    pub index: usize,
    pub chosen_mask: Vec<bool>,
    pub rejected_mask: Vec<bool>,
}

/// Locates the first token where the two sequences differ and builds masks
/// covering everything from that point on. A strict prefix diverges at the
/// shorter sequence's end; identical sequences come back flagged rather than
/// as an error.
pub fn branch_divergence_mask(
    chosen: &[u32],
    rejected: &[u32],
) -> Result<DivergenceMask, RlMathError> {
    if chosen.is_empty() {
        return Err(RlMathError::EmptySequence("chosen"));
    }
    if rejected.is_empty() {
        return Err(RlMathError::EmptySequence("rejected"));
    }
    let shorter = chosen.len().min(rejected.len());
    let index = (0..shorter)
        .find(|&i| chosen[i] != rejected[i])
        .unwrap_or(shorter);
    let chosen_mask: Vec<bool> = (0..chosen.len()).map(|i| i >= index).collect();
    let rejected_mask: Vec<bool> = (0..rejected.len()).map(|i| i >= index).collect();
    let diverged = chosen_mask.iter().chain(&rejected_mask).any(|&m| m);
    Ok(DivergenceMask {
        diverged,
        index,
        chosen_mask,
        rejected_mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_token_divergence_masks_only_that_token() {
        let mask = branch_divergence_mask(&[5, 7, 9], &[5, 7, 2]).unwrap();
        assert!(mask.diverged);
        assert_eq!(mask.index, 2);
        assert_eq!(mask.chosen_mask, vec![false, false, true]);
        assert_eq!(mask.rejected_mask, vec![false, false, true]);
    }

    #[test]
    fn identical_sequences_are_flagged_with_empty_masks() {
        let mask = branch_divergence_mask(&[5, 7], &[5, 7]).unwrap();
        assert!(!mask.diverged);
        assert_eq!(mask.index, 2);
        assert!(mask.chosen_mask.iter().all(|&m| !m));
        assert!(mask.rejected_mask.iter().all(|&m| !m));
    }

    #[test]
    fn strict_prefix_diverges_at_the_shorter_end() {
        let mask = branch_divergence_mask(&[5, 7], &[5, 7, 9, 9]).unwrap();
        assert!(mask.diverged);
        assert_eq!(mask.index, 2);
        assert_eq!(mask.chosen_mask, vec![false, false]);
        assert_eq!(mask.rejected_mask, vec![false, false, true, true]);
    }

    #[test]
    fn divergence_at_the_first_token_masks_everything() {
        let mask = branch_divergence_mask(&[1, 2, 3], &[9, 2, 3]).unwrap();
        assert_eq!(mask.index, 0);
        assert!(mask.chosen_mask.iter().all(|&m| m));
        assert!(mask.rejected_mask.iter().all(|&m| m));
    }

    #[test]
    fn empty_sequences_are_rejected() {
        assert!(matches!(
            branch_divergence_mask(&[], &[1]),
            Err(RlMathError::EmptySequence("chosen"))
        ));
        assert!(matches!(
            branch_divergence_mask(&[1], &[]),
            Err(RlMathError::EmptySequence("rejected"))
        ));
    }

    #[test]
    fn prefix_tokens_are_pairwise_equal_below_the_index() {
        let chosen = [3, 1, 4, 1, 5];
        let rejected = [3, 1, 4, 2, 6];
        let mask = branch_divergence_mask(&chosen, &rejected).unwrap();
        for i in 0..mask.index {
            assert_eq!(chosen[i], rejected[i]);
        }
        assert_ne!(chosen[mask.index], rejected[mask.index]);
    }
}
