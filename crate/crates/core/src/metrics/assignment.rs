//! Minimum-cost one-to-one assignment (Kuhn-Munkres), used by the optional
//! re-matching analysis that pairs each participant with the simulated agent
//! whose answers sit closest to theirs.

use super::MetricError;

/// Result of solving a square assignment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `column[i]` is the column assigned to row `i`.
    pub column_of_row: Vec<usize>,
    pub total_cost: f64,
}

/// Solves the square minimum-cost assignment problem in O(n^3) via shortest
/// augmenting paths with potentials.
pub fn kuhn_munkres(cost: &[Vec<f64>]) -> Result<Assignment, MetricError> {
    let n = cost.len();
    if n == 0 || cost.iter().any(|row| row.len() != n) {
        return Err(MetricError::NonSquare {
            rows: n,
            cols: cost.first().map(|r| r.len()).unwrap_or(0),
        });
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(MetricError::InvalidParameter(
            "assignment costs must be finite".into(),
        ));
    }

    // 1-indexed arrays; row_of_col[j] is the row currently matched to column
    // j, with index 0 serving as the virtual unmatched slot.
    let mut potential_row = vec![0.0f64; n + 1];
    let mut potential_col = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut previous_col = vec![0usize; n + 1];

    for row in 1..=n {
        row_of_col[0] = row;
        let mut current_col = 0usize;
        let mut min_reduced = vec![f64::INFINITY; n + 1];
        let mut visited = vec![false; n + 1];
        loop {
            visited[current_col] = true;
            let current_row = row_of_col[current_col];
            let mut delta = f64::INFINITY;
            let mut next_col = 0usize;
            for col in 1..=n {
                if visited[col] {
                    continue;
                }
                let reduced = cost[current_row - 1][col - 1]
                    - potential_row[current_row]
                    - potential_col[col];
                if reduced < min_reduced[col] {
                    min_reduced[col] = reduced;
                    previous_col[col] = current_col;
                }
                if min_reduced[col] < delta {
                    delta = min_reduced[col];
                    next_col = col;
                }
            }
            for col in 0..=n {
                if visited[col] {
                    potential_row[row_of_col[col]] += delta;
                    potential_col[col] -= delta;
                } else {
                    min_reduced[col] -= delta;
                }
            }
            current_col = next_col;
            if row_of_col[current_col] == 0 {
                break;
            }
        }
        // Walk the augmenting path back, shifting matches.
        while current_col != 0 {
            let prev = previous_col[current_col];
            row_of_col[current_col] = row_of_col[prev];
            current_col = prev;
        }
    }

    let mut column_of_row = vec![0usize; n];
    for col in 1..=n {
        column_of_row[row_of_col[col] - 1] = col - 1;
    }
    let total_cost = column_of_row
        .iter()
        .enumerate()
        .map(|(row, &col)| cost[row][col])
        .sum();
    Ok(Assignment {
        column_of_row,
        total_cost,
    })
}
