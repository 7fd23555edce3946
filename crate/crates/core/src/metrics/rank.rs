//! Spearman rank correlation with average ranks for ties.

/// Fractional ranks (1-based), tied values receiving the mean of the ranks
/// they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average of ranks i+1..=j+1
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation of two equal-length value vectors (already on a
/// common scale). Returns `None` when fewer than two pairs are available or
/// either side is constant — the coefficient is undefined there and callers
/// must report it as missing, not zero.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return None;
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return None;
    }
    Some(cov / (var_a.sqrt() * var_b.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: rank by definition — for each element, count smaller values
    /// and split ties explicitly — then Pearson by the direct formula.
    fn spearman_oracle(a: &[f64], b: &[f64]) -> Option<f64> {
        fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|x| {
                    let less = v.iter().filter(|y| *y < x).count() as f64;
                    let equal = v.iter().filter(|y| *y == x).count() as f64;
                    less + (equal + 1.0) / 2.0
                })
                .collect()
        }
        let ra = ranks_by_counting(a);
        let rb = ranks_by_counting(b);
        pearson(&ra, &rb)
    }

    #[test]
    fn monotone_relabeling_is_one() {
        let a = vec![0.0, 0.2, 0.5, 0.7, 1.0];
        let b: Vec<f64> = a.iter().map(|x| x * x).collect();
        assert!((spearman(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_order_is_minus_one() {
        let a = vec![0.1, 0.3, 0.5, 0.8];
        let b = vec![0.8, 0.5, 0.3, 0.1];
        assert!((spearman(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_side_is_missing() {
        let a = vec![0.5, 0.5, 0.5];
        let b = vec![0.1, 0.2, 0.3];
        assert_eq!(spearman(&a, &b), None);
        assert_eq!(spearman(&b, &a), None);
    }

    #[test]
    fn twelve_pair_synthetic_with_ties_matches_oracle() {
        let a = vec![0.0, 0.5, 0.5, 1.0, 0.2, 0.2, 0.8, 0.9, 0.5, 0.3, 0.0, 0.6];
        let b = vec![0.1, 0.4, 0.6, 0.9, 0.2, 0.3, 0.6, 1.0, 0.6, 0.2, 0.2, 0.5];
        let got = spearman(&a, &b).unwrap();
        let want = spearman_oracle(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn randomized_instances_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 150 {
            let n = rng.random_range(2usize..=24);
            // Coarse grid to force plenty of ties.
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0i64..=6) as f64 / 6.0).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0i64..=6) as f64 / 6.0).collect();
            match (spearman(&a, &b), spearman_oracle(&a, &b)) {
                (Some(got), Some(want)) => {
                    assert!((got - want).abs() < 1e-9, "a={a:?} b={b:?}");
                    checked += 1;
                }
                (got, want) => assert_eq!(got, want, "definedness must agree"),
            }
        }
    }

    #[test]
    fn average_ranks_handle_ties() {
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }
}
