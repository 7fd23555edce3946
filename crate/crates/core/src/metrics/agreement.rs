//! Chance-corrected agreement coefficients for two raters.

use super::MetricError;

/// Gwet's AC2 with quadratic ordinal weights.
///
/// Ratings are 0-based category indices on a scale of `k` categories.
/// Weights are `w(a,b) = 1 - (a-b)^2/(k-1)^2`; chance agreement follows
/// Gwet's form `p_e = T_w / (k(k-1)) * sum_c pi_c (1 - pi_c)` with `pi_c`
/// the mean marginal proportion of category `c` across the two raters and
/// `T_w` the sum of all weight-matrix entries. Unlike variance-based
/// coefficients this stays defined when both raters use a single category.
pub fn gwet_ac2(pairs: &[(usize, usize)], k: usize) -> Result<f64, MetricError> {
    if k < 2 {
        return Err(MetricError::DegenerateScale { k });
    }
    if pairs.len() < 2 {
        return Err(MetricError::EmptyPairs {
            needed: 2,
            got: pairs.len(),
        });
    }
    let span = ((k - 1) * (k - 1)) as f64;
    let weight = |a: usize, b: usize| -> f64 {
        let d = a as f64 - b as f64;
        1.0 - d * d / span
    };
    for &(a, b) in pairs {
        if a >= k || b >= k {
            return Err(MetricError::ScaleMismatch {
                message: format!("rating ({a},{b}) outside scale of {k} categories"),
            });
        }
    }
    let n = pairs.len() as f64;
    let p_a: f64 = pairs.iter().map(|&(a, b)| weight(a, b)).sum::<f64>() / n;

    let mut marginal = vec![0.0f64; k];
    for &(a, b) in pairs {
        marginal[a] += 0.5;
        marginal[b] += 0.5;
    }
    let spread: f64 = marginal
        .iter()
        .map(|count| {
            let pi = count / n;
            pi * (1.0 - pi)
        })
        .sum();
    let t_w: f64 = (0..k)
        .flat_map(|a| (0..k).map(move |b| weight(a, b)))
        .sum();
    let p_e = t_w / (k as f64 * (k as f64 - 1.0)) * spread;
    Ok((p_a - p_e) / (1.0 - p_e))
}

/// Unweighted Cohen's kappa. Returns `None` when both raters are constant on
/// the same category, where the coefficient is undefined.
pub fn cohen_kappa(a: &[i64], b: &[i64]) -> Result<Option<f64>, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::ScaleMismatch {
            message: format!("label vectors differ in length ({} vs {})", a.len(), b.len()),
        });
    }
    if a.is_empty() {
        return Err(MetricError::EmptyPairs { needed: 1, got: 0 });
    }
    let n = a.len() as f64;
    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;

    let categories: std::collections::BTreeSet<i64> = a.iter().chain(b.iter()).copied().collect();
    let mut expected = 0.0;
    for c in &categories {
        let pa = a.iter().filter(|&&x| x == *c).count() as f64 / n;
        let pb = b.iter().filter(|&&x| x == *c).count() as f64 / n;
        expected += pa * pb;
    }
    if (1.0 - expected).abs() < 1e-12 {
        return Ok(None);
    }
    Ok(Some((observed - expected) / (1.0 - expected)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Oracle: the AC2 formula evaluated from an explicit contingency table
    /// and a materialized weight matrix.
    pub(crate) fn ac2_oracle(pairs: &[(usize, usize)], k: usize) -> f64 {
        let n = pairs.len() as f64;
        let mut w = vec![vec![0.0f64; k]; k];
        for (a, row) in w.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                let d = a as f64 - b as f64;
                *cell = 1.0 - d * d / ((k - 1) as f64 * (k - 1) as f64);
            }
        }
        let mut joint = vec![vec![0.0f64; k]; k];
        for &(a, b) in pairs {
            joint[a][b] += 1.0 / n;
        }
        let mut p_a = 0.0;
        for a in 0..k {
            for b in 0..k {
                p_a += joint[a][b] * w[a][b];
            }
        }
        let mut t_w = 0.0;
        for row in &w {
            for cell in row {
                t_w += cell;
            }
        }
        let mut p_e = 0.0;
        for c in 0..k {
            let row: f64 = (0..k).map(|b| joint[c][b]).sum();
            let col: f64 = (0..k).map(|a| joint[a][c]).sum();
            let pi = (row + col) / 2.0;
            p_e += pi * (1.0 - pi);
        }
        p_e *= t_w / (k as f64 * (k as f64 - 1.0));
        (p_a - p_e) / (1.0 - p_e)
    }

    #[test]
    fn perfect_agreement_is_one() {
        let pairs: Vec<(usize, usize)> = vec![(0, 0), (3, 3), (6, 6), (2, 2)];
        assert!((gwet_ac2(&pairs, 7).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_raters_same_category_is_one() {
        // p_e = 0 here, so AC2 is defined and equals 1; the variance-based
        // coefficients are undefined on this input.
        let pairs: Vec<(usize, usize)> = vec![(5, 5); 10];
        assert!((gwet_ac2(&pairs, 7).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ten_item_synthetic_matches_oracle() {
        let pairs: Vec<(usize, usize)> = vec![
            (0, 1),
            (2, 2),
            (6, 5),
            (3, 3),
            (4, 6),
            (1, 1),
            (5, 5),
            (2, 3),
            (0, 0),
            (6, 6),
        ];
        let got = gwet_ac2(&pairs, 7).unwrap();
        assert!((got - ac2_oracle(&pairs, 7)).abs() < 1e-9);
    }

    #[test]
    fn randomized_instances_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let k = rng.random_range(2usize..=11);
            let n = rng.random_range(2usize..=40);
            let pairs: Vec<(usize, usize)> = (0..n)
                .map(|_| (rng.random_range(0..k), rng.random_range(0..k)))
                .collect();
            let got = gwet_ac2(&pairs, k).unwrap();
            let want = ac2_oracle(&pairs, k);
            assert!((got - want).abs() < 1e-9, "k={k} pairs={pairs:?}");
        }
    }

    #[test]
    fn degenerate_scale_rejected() {
        assert!(matches!(
            gwet_ac2(&[(0, 0), (0, 0)], 1),
            Err(MetricError::DegenerateScale { .. })
        ));
    }

    #[test]
    fn kappa_identical_nonconstant_is_one() {
        let a = vec![1, 2, 3, 2, 1];
        assert_eq!(cohen_kappa(&a, &a).unwrap(), Some(1.0));
    }

    #[test]
    fn kappa_contingency_hand_computation() {
        // 2x2 table {both yes: 25, a yes/b no: 5, a no/b yes: 10, both no: 60}
        // p_o = 85/100; p_a(yes)=30/100, p_b(yes)=35/100
        // p_e = 0.3*0.35 + 0.7*0.65 = 0.105 + 0.455 = 0.56
        // kappa = (0.85 - 0.56) / 0.44 = 0.6590909...
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..25 {
            a.push(1);
            b.push(1);
        }
        for _ in 0..5 {
            a.push(1);
            b.push(0);
        }
        for _ in 0..10 {
            a.push(0);
            b.push(1);
        }
        for _ in 0..60 {
            a.push(0);
            b.push(0);
        }
        let kappa = cohen_kappa(&a, &b).unwrap().unwrap();
        assert!((kappa - (0.85 - 0.56) / (1.0 - 0.56)).abs() < 1e-12);
    }

    #[test]
    fn kappa_constant_both_is_missing() {
        let a = vec![4; 8];
        assert_eq!(cohen_kappa(&a, &a).unwrap(), None);
    }

    #[test]
    fn kappa_independent_labels_near_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let a: Vec<i64> = (0..n).map(|_| rng.random_range(1i64..=7)).collect();
        let b: Vec<i64> = (0..n).map(|_| rng.random_range(1i64..=7)).collect();
        let kappa = cohen_kappa(&a, &b).unwrap().unwrap();
        assert!(kappa.abs() < 0.1, "kappa = {kappa}");
    }
}
