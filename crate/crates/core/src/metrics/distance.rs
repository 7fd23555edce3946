//! Distributional comparison of categorical responses: ordinal Wasserstein
//! distance, response histograms, and the degenerate-distribution detector.

use super::MetricError;
use crate::corpus::{CategoricalKind, Construct, Corpus, ResponseSet};
use std::collections::BTreeMap;

/// Wasserstein distance between two category histograms on the same ordinal
/// scale with unit spacing: the L1 distance between the normalized CDFs.
pub fn wasserstein_ordinal(hist_a: &[u64], hist_b: &[u64]) -> Result<f64, MetricError> {
    if hist_a.len() != hist_b.len() {
        return Err(MetricError::ScaleMismatch {
            message: format!(
                "histograms cover {} vs {} categories",
                hist_a.len(),
                hist_b.len()
            ),
        });
    }
    let total_a: u64 = hist_a.iter().sum();
    let total_b: u64 = hist_b.iter().sum();
    if total_a == 0 || total_b == 0 {
        return Err(MetricError::EmptyHistogram);
    }
    let mut cdf_a = 0.0;
    let mut cdf_b = 0.0;
    let mut distance = 0.0;
    // The final cumulative point is 1 - 1 = 0, so only K-1 terms contribute.
    for k in 0..hist_a.len() - 1 {
        cdf_a += hist_a[k] as f64 / total_a as f64;
        cdf_b += hist_b[k] as f64 / total_b as f64;
        distance += (cdf_a - cdf_b).abs();
    }
    Ok(distance)
}

/// Wasserstein distance between two empirical samples on a shared numeric
/// scale (used for the supplementary normalized overall view, where Likert
/// and NPS values are mixed on [0, 1]).
pub fn wasserstein_samples(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyHistogram);
    }
    let mut support: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let cdf = |v: &[f64], x: f64| v.iter().filter(|y| **y <= x).count() as f64 / v.len() as f64;
    let mut distance = 0.0;
    for w in support.windows(2) {
        distance += (cdf(a, w[0]) - cdf(b, w[0])).abs() * (w[1] - w[0]);
    }
    Ok(distance)
}

/// How response histograms are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Overall,
    Construct,
    Concept,
}

impl GroupBy {
    pub fn label(self) -> &'static str {
        match self {
            GroupBy::Overall => "overall",
            GroupBy::Construct => "construct",
            GroupBy::Concept => "concept",
        }
    }
}

/// Histogram of one source's categorical answers: group → scale → counts.
pub type HistogramTable = BTreeMap<String, BTreeMap<CategoricalKind, Vec<u64>>>;

/// Counts categorical responses per category, grouped as requested; Likert
/// and NPS stay on separate scales.
pub fn response_histograms(set: &ResponseSet, corpus: &Corpus, group_by: GroupBy) -> HistogramTable {
    let mut table: HistogramTable = BTreeMap::new();
    for response in set.responses() {
        let Some(question) = corpus.question(&response.question_id) else {
            continue;
        };
        let Some(kind) = question.kind.categorical() else {
            continue;
        };
        let Some(value) = response.value.category() else {
            continue;
        };
        let group = match group_by {
            GroupBy::Overall => "overall".to_string(),
            GroupBy::Construct => question.construct.label().to_string(),
            GroupBy::Concept => question.concept_id.clone(),
        };
        let counts = table
            .entry(group)
            .or_default()
            .entry(kind)
            .or_insert_with(|| vec![0; kind.scale_size()]);
        counts[(value - kind.min_value()) as usize] += 1;
    }
    table
}

/// Groups expected when grouping by construct (open-ended answers carry no
/// categories, so `qualitative` never appears).
pub fn construct_groups() -> [Construct; 4] {
    [
        Construct::Usefulness,
        Construct::EaseOfUse,
        Construct::BehavioralIntention,
        Construct::Nps,
    ]
}

/// Flags a histogram whose single largest category holds more than
/// `threshold` of the mass — the collapse signature of an ungrounded agent.
pub fn is_degenerate(hist: &[u64], threshold: f64) -> bool {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return false;
    }
    let max = *hist.iter().max().expect("non-empty histogram");
    max as f64 / total as f64 > threshold
}

/// Default single-category mass threshold for [`is_degenerate`].
pub const DEGENERATE_THRESHOLD: f64 = 0.9;

/// Per-scale normalized histogram pair for one source comparison.
pub fn scale_histograms(
    set: &ResponseSet,
    corpus: &Corpus,
) -> BTreeMap<CategoricalKind, Vec<u64>> {
    response_histograms(set, corpus, GroupBy::Overall)
        .remove("overall")
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SourceId;
    use crate::demo;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Oracle: exact minimum-cost transport via a successive-shortest-path
    /// min-cost flow on integer-scaled masses. Independent of the CDF
    /// identity the implementation uses.
    pub(crate) fn transport_oracle(hist_a: &[u64], hist_b: &[u64]) -> f64 {
        let total_a: i64 = hist_a.iter().sum::<u64>() as i64;
        let total_b: i64 = hist_b.iter().sum::<u64>() as i64;
        // Cross-scaling gives both sides the same integer mass total_a*total_b.
        let supply: Vec<i64> = hist_a.iter().map(|c| *c as i64 * total_b).collect();
        let demand: Vec<i64> = hist_b.iter().map(|c| *c as i64 * total_a).collect();
        let k = supply.len();

        // Node ids: 0 = source, 1..=k supplies, k+1..=2k demands, 2k+1 sink.
        let nodes = 2 * k + 2;
        let sink = 2 * k + 1;
        // edges as (from, to, capacity, cost), with reverse edges interleaved
        let mut from = Vec::new();
        let mut to = Vec::new();
        let mut cap = Vec::new();
        let mut cost = Vec::new();
        let mut add_edge = |f: usize, t: usize, c: i64, w: i64| {
            from.push(f);
            to.push(t);
            cap.push(c);
            cost.push(w);
            from.push(t);
            to.push(f);
            cap.push(0);
            cost.push(-w);
        };
        for (i, s) in supply.iter().enumerate() {
            add_edge(0, 1 + i, *s, 0);
        }
        for (j, d) in demand.iter().enumerate() {
            add_edge(1 + k + j, sink, *d, 0);
        }
        for i in 0..k {
            for j in 0..k {
                add_edge(1 + i, 1 + k + j, i64::MAX / 4, (i as i64 - j as i64).abs());
            }
        }
        let mut total_cost = 0i64;
        loop {
            // Bellman-Ford shortest path by cost from source to sink.
            let mut dist = vec![i64::MAX / 2; nodes];
            let mut parent_edge = vec![usize::MAX; nodes];
            dist[0] = 0;
            for _ in 0..nodes {
                let mut changed = false;
                for e in 0..from.len() {
                    if cap[e] > 0 && dist[from[e]] + cost[e] < dist[to[e]] {
                        dist[to[e]] = dist[from[e]] + cost[e];
                        parent_edge[to[e]] = e;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if parent_edge[sink] == usize::MAX {
                break;
            }
            let mut bottleneck = i64::MAX;
            let mut node = sink;
            while node != 0 {
                let e = parent_edge[node];
                bottleneck = bottleneck.min(cap[e]);
                node = from[e];
            }
            let mut node = sink;
            while node != 0 {
                let e = parent_edge[node];
                cap[e] -= bottleneck;
                cap[e ^ 1] += bottleneck;
                node = from[e];
            }
            total_cost += bottleneck * dist[sink];
        }
        total_cost as f64 / (total_a as f64 * total_b as f64)
    }

    #[test]
    fn identical_histograms_zero() {
        let h = vec![3, 1, 4, 1, 5, 9, 2];
        assert_eq!(wasserstein_ordinal(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn unit_shift_is_one() {
        let mut a = vec![0u64; 7];
        let mut b = vec![0u64; 7];
        a[2] = 5;
        b[3] = 5;
        assert!((wasserstein_ordinal(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_histograms_match_transport_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        for _ in 0..150 {
            let k = rng.random_range(2usize..=11);
            let a: Vec<u64> = (0..k).map(|_| rng.random_range(0u64..20)).collect();
            let b: Vec<u64> = (0..k).map(|_| rng.random_range(0u64..20)).collect();
            if a.iter().sum::<u64>() == 0 || b.iter().sum::<u64>() == 0 {
                continue;
            }
            let got = wasserstein_ordinal(&a, &b).unwrap();
            let want = transport_oracle(&a, &b);
            assert!((got - want).abs() < 1e-9, "a={a:?} b={b:?} got={got} want={want}");
        }
    }

    #[test]
    fn empty_and_mismatched_rejected() {
        assert!(matches!(
            wasserstein_ordinal(&[0, 0], &[1, 1]),
            Err(MetricError::EmptyHistogram)
        ));
        assert!(matches!(
            wasserstein_ordinal(&[1, 1], &[1, 1, 1]),
            Err(MetricError::ScaleMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn wd_is_a_metric_on_fixed_scale(
            a in proptest::collection::vec(0u64..12, 7),
            b in proptest::collection::vec(0u64..12, 7),
            c in proptest::collection::vec(0u64..12, 7),
        ) {
            prop_assume!(a.iter().sum::<u64>() > 0);
            prop_assume!(b.iter().sum::<u64>() > 0);
            prop_assume!(c.iter().sum::<u64>() > 0);
            let ab = wasserstein_ordinal(&a, &b).unwrap();
            let ba = wasserstein_ordinal(&b, &a).unwrap();
            let ac = wasserstein_ordinal(&a, &c).unwrap();
            let cb = wasserstein_ordinal(&c, &b).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12, "symmetry");
            prop_assert!(ab <= ac + cb + 1e-12, "triangle inequality");
            prop_assert!(ab >= 0.0);
        }
    }

    #[test]
    fn normalized_sample_distance_matches_hand_case() {
        // All mass at 0 vs all mass at 1 on the unit interval: distance 1.
        let a = vec![0.0, 0.0];
        let b = vec![1.0, 1.0, 1.0];
        assert!((wasserstein_samples(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_conservation() {
        let corpus = demo::demo_corpus();
        let set = &corpus.response_sets[&SourceId::HumanS1];
        let table = response_histograms(set, &corpus, GroupBy::Overall);
        let categorical_total = set
            .responses()
            .filter(|r| r.value.category().is_some())
            .count() as u64;
        let histogram_total: u64 = table["overall"].values().flatten().sum();
        assert_eq!(histogram_total, categorical_total);
    }

    #[test]
    fn construct_grouping_has_four_groups() {
        let corpus = demo::demo_corpus();
        let set = &corpus.response_sets[&SourceId::HumanS1];
        let table = response_histograms(set, &corpus, GroupBy::Construct);
        let groups: Vec<&String> = table.keys().collect();
        assert_eq!(groups.len(), 4);
        for c in construct_groups() {
            assert!(table.contains_key(c.label()), "missing group {c}");
        }
    }

    #[test]
    fn degenerate_detector_thresholds() {
        let mut all_sixes = vec![0u64; 7];
        all_sixes[5] = 100;
        assert!(is_degenerate(&all_sixes, DEGENERATE_THRESHOLD));
        // 91 of 101 in one bin is > 90%
        let mut nearly = all_sixes.clone();
        nearly[5] = 91;
        nearly[0] = 10;
        assert!(!is_degenerate(&[10, 10, 20, 20, 20, 10, 11], DEGENERATE_THRESHOLD));
        assert!(is_degenerate(&nearly, DEGENERATE_THRESHOLD));
        // exactly 90% is not strictly greater
        assert!(!is_degenerate(&[90, 10], DEGENERATE_THRESHOLD));
        assert!(!is_degenerate(&[0, 0], DEGENERATE_THRESHOLD));
    }

    #[test]
    fn demo_human_distributions_not_degenerate() {
        let corpus = demo::demo_corpus();
        for set in corpus.response_sets.values() {
            for (kind, hist) in scale_histograms(set, &corpus) {
                assert!(
                    !is_degenerate(&hist, DEGENERATE_THRESHOLD),
                    "{kind} histogram degenerate: {hist:?}"
                );
            }
        }
    }
}
