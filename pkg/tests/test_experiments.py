import math

import numpy as np
import pytest

from palmdpp import (ConfigError, Domain, FockGaussian, RadialRegion,
                     blaschke_divergence, build_kernel, det_identity_sweep,
                     moduli_law_check, order_separation, rigidity_variance,
                     rn_verify)
from palmdpp.experiments import LogTaperBump, default_statistics


def test_rn_trivial_equal_anchors(fock16):
    rep = rn_verify(fock16, (1 + 0j,), (1 + 0j,), replicas=400, seed=1,
                    stability=False)
    assert rep.extras["weights_mean"] == 1.0
    assert rep.extras["weights_ess"] == 400
    assert rep.passed


def test_rn_plane_small(fock16):
    rep = rn_verify(fock16, (1 + 0j,), (0j,), replicas=3000, seed=2,
                    stability=False)
    assert rep.passed, [v for v in rep.verdicts if not v["passed"]]
    assert any(e["label"] == "normalizer" for e in rep.estimates)


def test_rn_plane_rejects_cross_order(fock16):
    with pytest.raises(ConfigError):
        rn_verify(fock16, (1 + 0j,), (), replicas=100, seed=0)


def test_rn_report_deterministic(fock16):
    a = rn_verify(fock16, (1 + 0j,), (0j,), replicas=500, seed=5,
                  stability=False).to_dict()
    b = rn_verify(fock16, (1 + 0j,), (0j,), replicas=500, seed=5,
                  stability=False).to_dict()
    assert a == b
    assert "runtime_seconds" not in a


def test_default_statistics_shape():
    plane = default_statistics(Domain.PLANE)
    disc = default_statistics(Domain.DISC)
    assert len(plane) == 5 and len(disc) == 5
    pts = np.array([0.1 + 0.1j, 0.45 + 0j])
    assert plane[0](pts) == 2.0


# -- rigidity bump ----------------------------------------------------------------

@pytest.mark.parametrize("eps", [0.5, 0.1, 0.02])
def test_bump_shape_and_gradient_bound(eps):
    b = LogTaperBump(eps, 1.0)
    r = np.array([0.0, 0.25, 0.5])
    assert np.all(b.value(r) == 1.0)
    edge = 2.0 * math.exp(1.0 / eps)
    assert np.all(b.value(np.array([edge, 2 * edge])) == 0.0)
    rs = np.geomspace(1e-3, min(edge, 1e12), 4000)
    assert np.all(np.abs(b.radial_derivative(rs)) <= eps / rs + 1e-15)
    bound = eps + eps ** 2 * math.log(4.0)
    assert b.gradient_sq_integral() <= bound + 1e-8


def test_bump_is_c1_at_corners():
    b = LogTaperBump(0.3, 1.0)
    for s0 in (-math.log(2), 0.0, 1 / 0.3 - math.log(2), 1 / 0.3):
        r0 = math.exp(s0)
        h = 1e-7
        left = b.radial_derivative(np.array([r0 - h]))[0]
        right = b.radial_derivative(np.array([r0 + h]))[0]
        assert abs(left - right) < 1e-5


def test_rigidity_experiment_small():
    model = build_kernel(Domain.PLANE, FockGaussian(), 32)
    rep = rigidity_variance(model, epsilons=(0.5, 0.1, 0.02), r0=1.0,
                            replicas=600, seed=3)
    assert rep.passed, [v for v in rep.verdicts if not v["passed"]]
    vq = rep.extras["variance_quadrature"]
    assert vq[0] > vq[1] > vq[2]
    assert all(np.isfinite(rep.extras["variance_over_dirichlet"]))


# -- hyperbolic moduli --------------------------------------------------------------

def test_blaschke_divergence_analytics():
    rep = blaschke_divergence(k_values=(100, 1000, 10000), replicas=2000,
                              seed=4)
    assert rep.passed, [v for v in rep.verdicts if not v["passed"]]
    assert rep.extras["first_term"] == pytest.approx(1.0 / 3.0)
    slope = [v for v in rep.verdicts if v["check"] == "slope_half_vs_logK"][0]
    assert abs(slope["slope"] - 0.5) < 0.025


def test_blaschke_divergence_k_floor():
    with pytest.raises(ConfigError):
        blaschke_divergence(k_values=(5, 100), replicas=100, seed=0)


def test_moduli_law_small():
    rep = moduli_law_check(rank=4, replicas=1500, seed=6)
    assert rep.passed
    rep2 = moduli_law_check(rank=4, replicas=1500, seed=6)
    assert rep.to_dict() == rep2.to_dict()
    assert len(rep.extras["per_order"]) == 4


def test_order_separation_counts():
    model = build_kernel(Domain.PLANE, FockGaussian(), 12)
    rep = order_separation(model, (1 + 0j,), (0.5 + 0j, -0.5 + 0j),
                           replicas=60, seed=7)
    assert rep.passed
    assert rep.verdicts[0]["expected"] == {"p": 11, "q": 10}
    with pytest.raises(ConfigError):
        order_separation(model, (1 + 0j,), (0j,), replicas=10, seed=0)


def test_det_identity_sweep_small(fock16):
    rep = det_identity_sweep(fock16, replicas=20000, seed=8)
    assert rep.passed, [v for v in rep.verdicts if not v["passed"]]
    dets = [v["determinant"] for v in rep.verdicts]
    assert dets[0] < 1.0 and dets[1] < 1.0 and dets[2] > 1.0


def test_det_identity_custom_pairs(fock16):
    pairs = [(0.7, RadialRegion.disk(1.5))]
    rep = det_identity_sweep(fock16, pairs=pairs, replicas=5000, seed=9)
    assert len(rep.verdicts) == 1
    assert rep.passed


def test_report_json_round_trip(fock16):
    import json
    rep = det_identity_sweep(fock16, replicas=2000, seed=10)
    text = json.dumps(rep.to_dict(), sort_keys=True)
    back = json.loads(text)
    assert back["passed"] == rep.passed
