//! Tukey's HSD post-hoc test on group means, including the studentized
//! range distribution it needs.
//!
//! The distribution functions are evaluated by panelled Gauss-Legendre
//! quadrature of the classic double integral
//! `P(Q <= q) = ∫ f(s; ν) · P_range(q·s; k) ds`, where `s` is the scaled
//! chi distribution of the pooled standard deviation and `P_range` the range
//! CDF of `k` standard normals.

use super::MetricError;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn phi(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

fn big_phi(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// 20-point Gauss-Legendre nodes/weights on [-1, 1], from Newton iteration
/// on the Legendre recurrence.
static GL20: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(20));

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let mut p0 = 1.0;
        let mut p1 = x;
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over [lo, hi] in panels of at most `panel` width.
fn integrate(lo: f64, hi: f64, panel: f64, f: impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let (nodes, weights) = &*GL20;
    let panels = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + width / 2.0;
        let half = width / 2.0;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

/// CDF of the range of `k` independent standard normals.
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    let value = integrate(-8.0, w + 8.0, 2.0, |z| {
        let inner = big_phi(z) - big_phi(z - w);
        if inner <= 0.0 {
            0.0
        } else {
            phi(z) * inner.powi(k as i32 - 1)
        }
    });
    (kf * value).clamp(0.0, 1.0)
}

/// CDF of the studentized range statistic with `k` groups and `nu` degrees
/// of freedom.
pub fn studentized_range_cdf(q: f64, k: usize, nu: f64) -> f64 {
    assert!(k >= 2, "studentized range needs at least two groups");
    assert!(nu >= 1.0, "degrees of freedom must be at least 1");
    if q <= 0.0 {
        return 0.0;
    }
    // Density of s = sqrt(chi2_nu / nu), evaluated in log space.
    let ln_coeff = (1.0 - nu / 2.0) * std::f64::consts::LN_2 + (nu / 2.0) * nu.ln()
        - ln_gamma(nu / 2.0);
    let spread = 12.0 / (2.0 * nu).sqrt();
    let lo = (1.0 - spread).max(0.0);
    let hi = 1.0 + spread;
    let value = integrate(lo, hi, 0.25, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let ln_density = ln_coeff + (nu - 1.0) * s.ln() - nu * s * s / 2.0;
        ln_density.exp() * range_cdf(q * s, k)
    });
    value.clamp(0.0, 1.0)
}

/// Inverse CDF, by Illinois-method root finding on [`studentized_range_cdf`].
pub fn studentized_range_ppf(p: f64, k: usize, nu: f64) -> f64 {
    assert!((0.0..1.0).contains(&p));
    if p == 0.0 {
        return 0.0;
    }
    let mut a = 0.0;
    let mut fa = -p;
    let mut b = 4.0;
    let mut fb = studentized_range_cdf(b, k, nu) - p;
    while fb < 0.0 && b < 1e6 {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = studentized_range_cdf(b, k, nu) - p;
    }
    // fa < 0 <= fb from here on; Illinois keeps the bracket while halving
    // the stale endpoint's value to avoid false-position stalls.
    let mut side = 0i8;
    for _ in 0..100 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a || c >= b {
            c = 0.5 * (a + b);
        }
        let fc = studentized_range_cdf(c, k, nu) - p;
        if fc.abs() < 1e-12 || (b - a) < 1e-9 {
            return c;
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// One pairwise comparison row, shaped like the supplementary tables:
/// comparison label, mean difference, adjusted p-value, and the 95%
/// simultaneous confidence interval.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TukeyRow {
    pub group_a: String,
    pub group_b: String,
    /// mean(group_a) - mean(group_b)
    pub statistic: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TukeyRow {
    pub fn comparison(&self) -> String {
        format!("({} -- {})", self.group_a, self.group_b)
    }
}

/// Tukey(-Kramer) HSD over all group pairs at the 95% family-wise level,
/// using pooled within-group variance and the studentized range.
pub fn tukey_hsd(groups: &BTreeMap<String, Vec<f64>>) -> Result<Vec<TukeyRow>, MetricError> {
    let k = groups.len();
    if k < 2 {
        return Err(MetricError::DegenerateGroups {
            message: format!("need at least 2 groups, got {k}"),
        });
    }
    for (label, values) in groups {
        if values.len() < 2 {
            return Err(MetricError::DegenerateGroups {
                message: format!("group {label:?} has {} value(s), need at least 2", values.len()),
            });
        }
    }
    let n_total: usize = groups.values().map(|v| v.len()).sum();
    let nu = (n_total - k) as f64;
    let means: BTreeMap<&String, f64> = groups
        .iter()
        .map(|(label, v)| (label, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let ssw: f64 = groups
        .iter()
        .map(|(label, v)| v.iter().map(|x| (x - means[label]).powi(2)).sum::<f64>())
        .sum();
    let msw = ssw / nu;
    if msw <= 0.0 {
        return Err(MetricError::DegenerateGroups {
            message: "pooled within-group variance is zero".into(),
        });
    }

    let q_crit = studentized_range_ppf(0.95, k, nu);
    let labels: Vec<&String> = groups.keys().collect();
    let mut rows = Vec::new();
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let (a, b) = (labels[i], labels[j]);
            let (na, nb) = (groups[a].len() as f64, groups[b].len() as f64);
            let diff = means[a] - means[b];
            let se = (msw / 2.0 * (1.0 / na + 1.0 / nb)).sqrt();
            let q_obs = diff.abs() / se;
            let p_value = (1.0 - studentized_range_cdf(q_obs, k, nu)).clamp(0.0, 1.0);
            rows.push(TukeyRow {
                group_a: a.clone(),
                group_b: b.clone(),
                statistic: diff,
                p_value,
                ci_low: diff - q_crit * se,
                ci_high: diff + q_crit * se,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference values from SciPy's studentized_range distribution.
    const CDF_REFERENCE: &[(f64, usize, f64, f64)] = &[
        (3.877, 3, 10.0, 0.9500129112467469),
        (1.0, 2, 5.0, 0.48891591956971947),
        (2.5, 4, 20.0, 0.6827970026274168),
        (5.0, 7, 3.0, 0.811323684290154),
        (3.0, 3, 1.0, 0.5896670445223818),
        (4.2, 11, 60.0, 0.8736558323777073),
        (0.5, 2, 2.0, 0.24253562503632994),
        (6.5, 5, 12.0, 0.9954701638468553),
        (2.0, 9, 200.0, 0.10871692784596561),
        (3.5, 4, 2000.0, 0.9358117328226102),
    ];

    #[test]
    fn cdf_matches_reference_values() {
        for &(q, k, nu, expected) in CDF_REFERENCE {
            let got = studentized_range_cdf(q, k, nu);
            assert!(
                (got - expected).abs() < 1e-6,
                "cdf({q}, {k}, {nu}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn ppf_matches_reference_values() {
        let got = studentized_range_ppf(0.95, 3, 10.0);
        assert!((got - 3.876776750013158).abs() < 1e-4, "got {got}");
        let got = studentized_range_ppf(0.95, 4, 12.0);
        assert!((got - 4.198660231300105).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn gl_weights_sum_to_two() {
        let (_, weights) = &*GL20;
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    fn groups(data: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
        data.iter()
            .map(|(label, values)| (label.to_string(), values.to_vec()))
            .collect()
    }

    /// Three-group fixture with worked numbers from SciPy's tukey_hsd.
    #[test]
    fn textbook_fixture_matches_reference_to_1e3() {
        let g = groups(&[
            ("g0", &[24.5, 23.5, 26.4, 27.1, 29.9]),
            ("g1", &[28.4, 34.2, 29.5, 32.2, 30.1]),
            ("g2", &[26.1, 28.3, 24.3, 26.2, 27.8]),
        ]);
        let rows = tukey_hsd(&g).unwrap();
        assert_eq!(rows.len(), 3);
        let expected = [
            // (a, b, statistic, p, lo, hi)
            ("g0", "g1", -4.600000000000001, 0.01444832673640073, -8.249159003581287, -0.9508409964187154),
            ("g0", "g2", -0.26000000000000156, 0.9803107240941081, -3.9091590035812875, 3.3891590035812844),
            ("g1", "g2", 4.34, 0.02033113673971476, 0.6908409964187139, 7.989159003581285),
        ];
        for (row, (a, b, stat, p, lo, hi)) in rows.iter().zip(expected) {
            assert_eq!(&row.group_a, a);
            assert_eq!(&row.group_b, b);
            assert!((row.statistic - stat).abs() < 1e-3, "{}: {}", row.comparison(), row.statistic);
            assert!((row.p_value - p).abs() < 1e-3, "{}: {}", row.comparison(), row.p_value);
            assert!((row.ci_low - lo).abs() < 1e-3);
            assert!((row.ci_high - hi).abs() < 1e-3);
        }
    }

    #[test]
    fn identical_groups_statistic_zero_p_near_one() {
        let g = groups(&[
            ("a", &[1.0, 2.0, 3.0, 4.0]),
            ("b", &[1.0, 2.0, 3.0, 4.0]),
        ]);
        let rows = tukey_hsd(&g).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].statistic, 0.0);
        assert!(rows[0].p_value > 0.999);
        assert!(rows[0].ci_low < 0.0 && rows[0].ci_high > 0.0);
    }

    #[test]
    fn four_groups_give_six_rows() {
        let g = groups(&[
            ("a", &[1.0, 2.0]),
            ("b", &[2.0, 3.0]),
            ("c", &[3.0, 4.0]),
            ("d", &[4.0, 5.0]),
        ]);
        assert_eq!(tukey_hsd(&g).unwrap().len(), 6);
    }

    #[test]
    fn degenerate_groups_rejected() {
        let g = groups(&[("a", &[1.0]), ("b", &[2.0, 3.0])]);
        assert!(matches!(
            tukey_hsd(&g),
            Err(MetricError::DegenerateGroups { .. })
        ));
        let g = groups(&[("a", &[2.0, 2.0]), ("b", &[2.0, 2.0])]);
        assert!(matches!(
            tukey_hsd(&g),
            Err(MetricError::DegenerateGroups { .. })
        ));
    }
}
