from collections import Counter

import numpy as np
import pytest
from scipy.stats import kstest

from secretgraph.channels import PauliChannel
from secretgraph.graph import ghz, line
from secretgraph.protocols import ProtocolConfig, control_config
from secretgraph.recurrence import Schedule
from secretgraph.secrecy import (
    ABSENT,
    TranscriptHistogram,
    agent_marginal_check,
    compare_histograms,
    completeness_check,
    expand_features,
    indistinguishability_test,
    transcript_histogram,
)


def _cheap_cfg(g, seed=0):
    return ProtocolConfig(g, copies=8, channels=(PauliChannel.dephasing(0.05),) * g.n_vertices,
                          schedule=Schedule(("P1",), 1), probe_fraction=0.0, seed=seed)


def _synthetic(rng, probs, trials, slots=3):
    h = TranscriptHistogram()
    for _ in range(trials):
        h.add({("s", k): str(rng.choice(len(probs), p=probs)) for k in range(slots)})
    return h


@pytest.mark.parametrize("g", [ghz(1), ghz(2), ghz(3), line(3)], ids=str)
def test_agent_marginal_is_maximally_mixed(g):
    assert agent_marginal_check(g) < 1e-10


@pytest.mark.parametrize("g", [ghz(3), line(4)], ids=str)
def test_uniform_mixture_of_graph_basis_is_identity(g):
    assert completeness_check(g) < 1e-10


def test_histogram_counts_absent_slots():
    h = TranscriptHistogram()
    h.add({("a",): "x"})
    h.add({("b",): "y"})
    assert h.slot(("a",)) == Counter({"x": 1, ABSENT: 1})
    merged = h.merge(h)
    assert merged.trials == 4 and merged.slot(("b",))["y"] == 2


def test_expand_features_above_exact_size():
    feats = {("final", 0): "X10110"}
    assert expand_features(feats, 4) is feats
    out = expand_features(feats, 5)
    assert out[("final", 0, "bit", 0)] == "X1"
    assert out[("final", 0, "pair", 0, 2)] == "X0"
    assert len(out) == 5 + 10


def test_histogram_needs_enough_trials():
    with pytest.raises(ValueError):
        transcript_histogram(_cheap_cfg(ghz(3)), 10)


def test_compare_identical_sources_is_calibrated():
    # p-values of the summed homogeneity test are uniform under the null
    rng = np.random.default_rng(0)
    probs = np.array([0.4, 0.3, 0.2, 0.07, 0.03])
    pvals = [compare_histograms(_synthetic(rng, probs, 400), _synthetic(rng, probs, 400), n_boot=20).p_value
             for _ in range(100)]
    assert kstest(pvals, "uniform").pvalue > 0.01


def test_compare_detects_shifted_source():
    rng = np.random.default_rng(1)
    a = _synthetic(rng, [0.5, 0.5], 2000)
    b = _synthetic(rng, [0.6, 0.4], 2000)
    res = compare_histograms(a, b, n_boot=50)
    assert res.p_value < 1e-6
    assert res.tv_estimate == pytest.approx(0.1, abs=0.03)


def test_blind_transcripts_null_calibration():
    # same-size graphs, repeated independent experiments: p-values look uniform
    pvals = []
    for seed in range(20):
        chi2, dof, p, tv = indistinguishability_test(ghz(3), line(3), _cheap_cfg(ghz(3), seed), 1000, n_boot=20)
        pvals.append(p)
    print(f"min p {min(pvals):.3f}")
    assert kstest(pvals, "uniform").pvalue > 0.001


def test_control_mode_is_distinguishable():
    res = indistinguishability_test(ghz(3), line(3), control_config(_cheap_cfg(ghz(3))), 1000, n_boot=20)
    assert res.p_value < 1e-3
    assert res.tv_estimate > 5 * res.tv_error


def test_graphs_must_match_in_size():
    with pytest.raises(ValueError):
        indistinguishability_test(ghz(3), line(4), _cheap_cfg(ghz(3)), 1000)
