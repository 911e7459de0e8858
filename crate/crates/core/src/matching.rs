//! Structural rank of a binary pattern via maximum bipartite matching.
//!
//! The generic rank of a masked matrix with continuous random entries equals
//! the size of a maximum row/column matching over its nonzero pattern.

use crate::channel::MaskMatrix;

/// Maximum matching size between rows and columns of `mask` (augmenting paths).
pub fn structural_rank(mask: &MaskMatrix) -> usize {
    let adj: Vec<Vec<usize>> = (0..mask.n_rows())
        .map(|i| mask.row_support(i).collect())
        .collect();
    let mut col_match: Vec<Option<usize>> = vec![None; mask.n_cols()];
    let mut seen = vec![0usize; mask.n_cols()];
    let mut size = 0;
    for row in 0..mask.n_rows() {
        if adj[row].is_empty() {
            continue;
        }
        // row + 1 is a unique visit stamp for this search
        if augment(row, row + 1, &adj, &mut col_match, &mut seen) {
            size += 1;
        }
    }
    size
}

fn augment(
    row: usize,
    stamp: usize,
    adj: &[Vec<usize>],
    col_match: &mut [Option<usize>],
    seen: &mut [usize],
) -> bool {
    for &c in &adj[row] {
        if seen[c] == stamp {
            continue;
        }
        seen[c] = stamp;
        let free = match col_match[c] {
            None => true,
            Some(other) => augment(other, stamp, adj, col_match, seen),
        };
        if free {
            col_match[c] = Some(row);
            return true;
        }
    }
    false
}
