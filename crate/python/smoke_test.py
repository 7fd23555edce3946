#!/usr/bin/env python3
"""Smoke test for the panelsim_py bindings.

Builds nothing itself: run `cargo build -p panelsim-py` first. The script
locates the compiled cdylib under target/, exposes it as an importable
module, and exercises each binding against known values.
"""

import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = [
        REPO / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libpanelsim_py.so", "libpanelsim_py.dylib", "panelsim_py.dll")
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit("panelsim_py cdylib not found; run: cargo build -p panelsim-py")


def import_module():
    src = locate_cdylib()
    staging = Path(tempfile.mkdtemp(prefix="panelsim_py_"))
    suffix = ".pyd" if src.suffix == ".dll" else ".so"
    shutil.copy2(src, staging / f"panelsim_py{suffix}")
    sys.path.insert(0, str(staging))
    import panelsim_py

    return panelsim_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) < tol, f"{a} != {b} (tol {tol})"


def main():
    m = import_module()

    # scale normalization
    approx(m.normalize_response(1, "likert7"), 0.0)
    approx(m.normalize_response(7, "likert7"), 1.0)
    approx(m.normalize_response(4, "likert7"), 0.5)
    approx(m.normalize_response(5, "nps11"), 0.5)

    # error/agreement metrics
    pairs = [(1, 2), (4, 4), (7, 5)]
    approx(m.mae(pairs, "likert7"), 1.0)
    approx(m.exact_match_accuracy(pairs, "likert7"), 1 / 3)
    assert m.relative_accuracy_percent(0.300, 0.446) == 67
    approx(m.gwet_ac2([(3, 3), (6, 6), (1, 1), (7, 7)], "likert7"), 1.0)
    approx(m.gwet_ac2([(5, 5)] * 10, "likert7"), 1.0)  # defined on constant raters
    approx(m.spearman([0.0, 0.5, 1.0], [0.1, 0.2, 0.9]), 1.0)
    assert m.spearman([0.5, 0.5, 0.5], [0.1, 0.2, 0.9]) is None
    assert m.cohen_kappa([1, 2, 3, 2], [1, 2, 3, 2]) == 1.0
    assert m.cohen_kappa([4, 4, 4], [4, 4, 4]) is None

    # distributional comparison
    shifted_a = [0, 0, 5, 0, 0, 0, 0]
    shifted_b = [0, 0, 0, 5, 0, 0, 0]
    approx(m.wasserstein_ordinal(shifted_a, shifted_a), 0.0)
    approx(m.wasserstein_ordinal(shifted_a, shifted_b), 1.0)
    assert m.is_degenerate([91, 9], 0.9)
    assert not m.is_degenerate([50, 50], 0.9)

    # bootstrap: deterministic under a fixed seed
    values = [0.1, 0.9, 0.4, 0.6, 0.2, 0.8]
    a = m.bootstrap_summary(values, resamples=500, seed=7)
    b = m.bootstrap_summary(values, resamples=500, seed=7)
    assert a == b
    assert a["ci_low"] <= a["mean"] <= a["ci_high"]
    with_p = m.bootstrap_summary(values, resamples=500, seed=7, reference=values)
    assert with_p["p_value"] == 1.0  # identical reference → no difference

    # Tukey HSD against an independent reference when scipy is available
    groups = {
        "g0": [24.5, 23.5, 26.4, 27.1, 29.9],
        "g1": [28.4, 34.2, 29.5, 32.2, 30.1],
        "g2": [26.1, 28.3, 24.3, 26.2, 27.8],
    }
    rows = m.tukey_hsd(groups)
    assert len(rows) == 3
    try:
        from scipy.stats import tukey_hsd as scipy_tukey

        res = scipy_tukey(groups["g0"], groups["g1"], groups["g2"])
        ci = res.confidence_interval()
        expect = {
            ("g0", "g1"): (res.statistic[0, 1], res.pvalue[0, 1], ci.low[0, 1], ci.high[0, 1]),
            ("g0", "g2"): (res.statistic[0, 2], res.pvalue[0, 2], ci.low[0, 2], ci.high[0, 2]),
            ("g1", "g2"): (res.statistic[1, 2], res.pvalue[1, 2], ci.low[1, 2], ci.high[1, 2]),
        }
        for ga, gb, stat, p, lo, hi in rows:
            estat, ep, elo, ehi = expect[(ga, gb)]
            approx(stat, estat, 1e-3)
            approx(p, ep, 1e-3)
            approx(lo, elo, 1e-3)
            approx(hi, ehi, 1e-3)
        print("tukey_hsd cross-checked against scipy")
    except ImportError:
        print("scipy unavailable; skipped tukey cross-check")

    approx(m.studentized_range_cdf(3.877, 3, 10.0), 0.95, 1e-4)

    # assignment
    cols, total = m.min_cost_assignment([[0.1, 5.0], [5.0, 0.2]])
    assert cols == [0, 1]
    approx(total, 0.3)

    # transcript segmentation: same-speaker runs concatenate
    pairs, warnings = m.segment_transcript(
        [
            ("interviewer", "a"),
            ("interviewer", "b"),
            ("participant", "c"),
            ("interviewer", "dangling"),
        ]
    )
    assert pairs == [("a b", "c")]
    assert warnings == 1

    # memory store: exact MIPS retrieval, self-query first
    store = m.PyMemoryStore(
        "p01",
        [
            ("What documents do you read?", "Mostly vendor contracts and filings."),
            ("How do you verify numbers?", "I trace every figure to the source page."),
        ],
        dimension=32,
        seed=3,
    )
    assert len(store) == 2
    store.add_reflection("The subject insists on verifying sources.")
    assert len(store) == 3
    top_id, top_text = store.retrieve("The subject insists on verifying sources.", 1)[0]
    assert top_id.startswith("refl-") and "verifying sources" in top_text

    print("smoke test passed")


if __name__ == "__main__":
    main()
