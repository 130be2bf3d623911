"""Acceptance criteria, one test per criterion, each printing a pass/fail
line with its runtime. Statistical thresholds are pre-registered: 3 sigma
for z-comparisons, p > 0.001 for KS, and the stated deterministic
tolerances. Run with `pytest -s tests/test_acceptance.py` to see the lines.
"""
import hashlib
import json
import math
import os
import time

import numpy as np

from palmdpp import (BergmanClassical, Domain, FockGaussian, FockRadial,
                     PalmAnchor, RadiusSchedule, blaschke_divergence,
                     build_kernel, condition_integrals, det_identity_sweep,
                     kernel_eval, moduli_law_check, palm_downdate,
                     rational_modulus_sq, rigidity_variance, rn_verify,
                     trace_quadrature)
from palmdpp.cli import main
from palmdpp.kernelspace import log_monomial_norms_sq

THREADS = min(2, os.cpu_count() or 1)
SEED = 20260810


class _Timer:
    def __init__(self, name, budget):
        self.name, self.budget = name, budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, *_):
        self.elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[{status}] {self.name}: {self.elapsed:.1f}s "
              f"(budget {self.budget:.0f}s)")
        return False

    def check_budget(self):
        elapsed = time.perf_counter() - self.t0
        assert elapsed < self.budget, \
            f"{self.name} took {elapsed:.1f}s, budget {self.budget}s"


def test_criterion_01_ginibre_diagonal():
    with _Timer("1 ginibre diagonal 1/pi at rank 256", 10) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 256)
        r = np.concatenate([[0.0], np.linspace(0.01, 5.0, 60)])
        angles = np.exp(1j * 2 * np.pi * np.arange(16) / 16)
        z = np.concatenate([(ri * angles) for ri in r])
        diag = model.diag_at(z, weighted=True)
        err = np.max(np.abs(diag - 1.0 / math.pi))
        assert err < 1e-6, err
        t.check_budget()


def test_criterion_02_monomial_norms():
    with _Timer("2 monomial norms: quadrature vs closed form", 5) as t:
        for alpha in (1.0, 1.5, 2.0):
            w = FockRadial(alpha)
            closed = log_monomial_norms_sq(w, 33, method="closed_form")
            quad = log_monomial_norms_sq(w, 33, method="quadrature")
            assert np.max(np.abs(closed - quad)) < 1e-8
        t.check_budget()


def test_criterion_03_palm_downdate():
    with _Timer("3 palm conditioning: vanishing/trace/order", 5) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 32)
        anchor = (0.7 + 0.1j, -0.4 + 0.5j, 1j)
        down = palm_downdate(model, PalmAnchor(anchor))
        grid = np.array([0.2 + 0.1j, -1 + 0.4j, 1.5 - 0.3j, 0.6j, 2 + 0j,
                         -0.8 - 0.8j])
        worst = max(abs(kernel_eval(down, p, y))
                    for p in anchor for y in np.concatenate([grid, anchor]))
        assert worst < 1e-10, worst
        drop = trace_quadrature(model) - trace_quadrature(down)
        assert abs(drop - len(anchor)) < 1e-8
        other = palm_downdate(model, PalmAnchor(anchor[::-1]))
        diff = max(abs(kernel_eval(down, x, y) - kernel_eval(other, x, y))
                   for x in grid for y in grid)
        assert diff < 1e-10, diff
        t.check_budget()


def test_criterion_04_determinant_identity():
    with _Timer("4 determinant identity, 3 pairs at 1e5", 180) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 16)
        report = det_identity_sweep(model, replicas=100_000, seed=SEED,
                                    threads=THREADS)
        assert report.passed, report.verdicts
        assert len([v for v in report.verdicts
                    if v["check"].startswith("det_identity")]) == 3
        t.check_budget()


def test_criterion_05_rn_disc():
    with _Timer("5 radon-nikodym disc (rank 64 + stability)", 600) as t:
        model = build_kernel(Domain.DISC, BergmanClassical(0.0), 64)
        report = rn_verify(model, (0.4 + 0j,), (), replicas=100_000,
                           seed=SEED, threads=THREADS, stability=True,
                           stability_fraction=8)
        assert report.passed, [v for v in report.verdicts if not v["passed"]]
        t.check_budget()


def test_criterion_06_rn_plane():
    with _Timer("6 radon-nikodym plane (rank 64 + stability)", 600) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 64)
        report = rn_verify(model, (1 + 0j,), (0j,), replicas=100_000,
                           seed=SEED, threads=THREADS, stability=True,
                           stability_fraction=8)
        assert report.passed, [v for v in report.verdicts if not v["passed"]]
        t.check_budget()


def test_criterion_07_rigidity_bump():
    with _Timer("7 rigidity bump bound and variance decay", 120) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 128)
        report = rigidity_variance(model, epsilons=(0.5, 0.1, 0.02), r0=1.0,
                                   replicas=1500, seed=SEED, threads=THREADS)
        for eps, grad in zip((0.5, 0.1, 0.02),
                             report.extras["gradient_integrals"]):
            assert grad <= eps + eps * eps * math.log(4.0) + 1e-8
        vq = report.extras["variance_quadrature"]
        assert vq[0] > vq[1] > vq[2], vq
        assert report.passed, [v for v in report.verdicts if not v["passed"]]
        t.check_budget()


def test_criterion_08_blaschke_divergence():
    with _Timer("8 blaschke divergence sums and slope", 60) as t:
        report = blaschke_divergence(k_values=(100, 1000, 10000),
                                     replicas=20000, seed=SEED)
        assert report.passed, [v for v in report.verdicts if not v["passed"]]
        slope = [v for v in report.verdicts
                 if v["check"] == "slope_half_vs_logK"][0]["slope"]
        assert abs(slope - 0.5) <= 0.025
        t.check_budget()


def test_criterion_09_moduli_law():
    with _Timer("9 moduli law KS at rank 8, 1e4 replicas", 300) as t:
        report = moduli_law_check(rank=8, replicas=10_000, seed=SEED,
                                  threads=THREADS)
        assert report.passed, report.extras["pooled"]
        t.check_budget()


def test_criterion_10_flatcut_trend():
    with _Timer("10 flat-cut sequence decreasing", 120) as t:
        model = build_kernel(Domain.PLANE, FockGaussian(), 64)
        g = rational_modulus_sq((1 + 0j,), (0j,))
        sched = RadiusSchedule((3.0, 4.5, 6.75))
        ci = condition_integrals(model, g, sched)
        assert ci.flatcut[0] > ci.flatcut[1] > ci.flatcut[2], ci.flatcut
        t.check_budget()


def test_criterion_11_cli_determinism(tmp_path):
    with _Timer("11 byte-identical CLI runs", 120) as t:
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "model": {"domain": "plane",
                      "weight": {"kind": "fock_gaussian"}, "rank": 16},
            "seed": 99,
            "experiment": {"k_values": [10, 100]},
        }))
        digests = []
        for tag in ("x", "y"):
            sample = tmp_path / f"s_{tag}.jsonl"
            rep = tmp_path / f"r_{tag}.json"
            assert main(["sample", "--config", str(cfg), "--replicas", "40",
                         "--out", str(sample)]) == 0
            assert main(["experiment", "blaschke", "--config", str(cfg),
                         "--replicas", "500", "--out", str(rep)]) == 0
            digests.append((hashlib.sha256(sample.read_bytes()).hexdigest(),
                            hashlib.sha256(rep.read_bytes()).hexdigest()))
        assert digests[0] == digests[1]
        golden = os.path.join(os.path.dirname(__file__), "golden")
        assert os.path.exists(os.path.join(golden, "sample.jsonl"))
        assert os.path.exists(os.path.join(golden, "blaschke_report.json"))
        t.check_budget()
