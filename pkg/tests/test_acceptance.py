"""Exit criteria.  Each test reports a PASS/FAIL line in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from lipcert import (
    BACKEND,
    audit,
    certify_bilinear,
    certify_mahalanobis,
    finite_diff_gradient,
    witness_bilinear,
    witness_mahalanobis,
)
from lipcert.certify import sample_ball
from lipcert.linalg import psd_factor, spectral_norm
from lipcert.metrics import BallDomain, PairPoint, bilinear, bilinear_grad, mahalanobis, mahalanobis_grad

SQRT2 = math.sqrt(2.0)
N_MATRICES = 100
N_QUADRUPLES = 10_000
VIOLATION_RTOL = 1e-9
RADII = (0.5, 1.0, 10.0)
HERE = Path(__file__).parent


@pytest.fixture(scope="module")
def psd_matrices():
    """100 Gram matrices ``G.T @ G``, ``G ~ U[-1, 1]``, dimensions cycling through 1..8."""
    rng = np.random.default_rng(1001)
    out = []
    for i in range(N_MATRICES):
        d = 1 + i % 8
        G = rng.uniform(-1.0, 1.0, (d, d))
        out.append((G, G.T @ G))
    return out


@pytest.fixture(scope="module")
def general_matrices():
    rng = np.random.default_rng(2002)
    return [rng.uniform(-1.0, 1.0, (1 + i % 8, 1 + i % 8)) for i in range(N_MATRICES)]


def test_1_mahalanobis_soundness(criterion, psd_matrices):
    with criterion(1, f"Mahalanobis soundness [{BACKEND}]") as info:
        t0 = time.perf_counter()
        violations = 0
        worst = 0.0
        for i, (G, M) in enumerate(psd_matrices):
            cert = certify_mahalanobis(M)
            # independent oracle: ||L||_2 = sigma_max(G) since both factor M
            assert cert.k_theoretical == pytest.approx(SQRT2 * np.linalg.norm(G, 2), rel=1e-8)
            rep = audit(cert, M, n_samples=N_QUADRUPLES, seed=10_000 + i)
            violations += rep.violation_count
            worst = max(worst, rep.empirical_slope_sup / cert.k_theoretical)
        elapsed = time.perf_counter() - t0
        info["detail"] = f"violations={violations}, max slope/k={worst:.6f}, {elapsed:.1f}s"
        assert violations == 0
        assert elapsed < 30.0


def test_2_mahalanobis_tightness(criterion, psd_matrices):
    with criterion(2, "Mahalanobis tightness") as info:
        worst = math.inf
        checked = 0
        for _, M in psd_matrices:
            k = certify_mahalanobis(M).k_theoretical
            if k <= 1e-8:
                continue
            w = witness_mahalanobis(M, h=1e-4)
            worst = min(worst, w.slope / k)
            checked += 1
        info["detail"] = f"min witness/k={worst:.9f} over {checked} matrices"
        assert checked == N_MATRICES
        assert worst >= 0.999


def test_3_bilinear_soundness_and_tightness(criterion, general_matrices):
    with criterion(3, f"bilinear soundness and tightness [{BACKEND}]") as info:
        violations = 0
        worst_w = math.inf
        for i, M in enumerate(general_matrices):
            d = M.shape[0]
            sigma = np.linalg.svd(M, compute_uv=False)[0]
            for R in RADII:
                dom = BallDomain(R, d)
                cert = certify_bilinear(M, dom)
                assert cert.k_theoretical == pytest.approx(SQRT2 * sigma * R, rel=1e-8)
                rep = audit(cert, M, dom, n_samples=N_QUADRUPLES, seed=20_000 + i)
                violations += rep.violation_count
                w = witness_bilinear(M, dom)
                worst_w = min(worst_w, w.slope / cert.k_theoretical)
        info["detail"] = f"violations={violations}, min witness/k={worst_w:.6f}"
        assert violations == 0
        assert worst_w >= 0.99


def test_4_gradient_correctness(criterion):
    with criterion(4, "analytic gradients vs central differences") as info:
        rng = np.random.default_rng(4004)
        h = 1e-6
        maha_err = bil_err = 0.0
        n = 0
        while n < 1000:
            d = int(rng.integers(1, 9))
            G = rng.uniform(-1, 1, (d, d))
            M = G.T @ G
            F = psd_factor(M)
            x1, x2 = sample_ball(rng, 2, d, 1.0)
            p = PairPoint(x1, x2)
            if mahalanobis(F, p) <= 0.1:
                continue
            fd = finite_diff_gradient(lambda q: mahalanobis(F, q), p, h).stacked()
            maha_err = max(maha_err, np.max(np.abs(fd - mahalanobis_grad(M, F, p).stacked())))
            fd = finite_diff_gradient(lambda q: bilinear(G, q), p, h).stacked()
            bil_err = max(bil_err, np.max(np.abs(fd - bilinear_grad(G, p).stacked())))
            n += 1
        info["detail"] = f"mahalanobis max err={maha_err:.2e}, bilinear max err={bil_err:.2e}"
        assert maha_err <= 1e-5
        assert bil_err <= 1e-9


def test_5_closed_form_values(criterion):
    with criterion(5, "closed-form constants") as info:
        k1 = certify_mahalanobis(np.eye(3)).k_theoretical
        k2 = certify_mahalanobis(np.diag([4.0, 1.0])).k_theoretical
        k3 = certify_bilinear([[0.0, 2.0], [0.0, 0.0]], BallDomain(3.0, 2)).k_theoretical
        info["detail"] = f"{k1!r}, {k2!r}, {k3!r}"
        assert abs(k1 - SQRT2) <= 1e-12
        assert abs(k2 - 2 * SQRT2) <= 1e-10
        assert abs(k3 - 6 * SQRT2) <= 1e-10


def test_6_scaling_laws(criterion, psd_matrices, general_matrices):
    with criterion(6, "scaling laws") as info:
        worst = 0.0

        def rel(a, b):
            return abs(a - b) / max(abs(b), 1e-300)

        for (_, M), A in zip(psd_matrices, general_matrices):
            d = A.shape[0]
            km = certify_mahalanobis(M).k_theoretical
            kb = certify_bilinear(A, BallDomain(1.0, d)).k_theoretical
            for c in (0.25, 4.0):
                worst = max(
                    worst,
                    rel(certify_mahalanobis(c * M).k_theoretical, math.sqrt(c) * km),
                    rel(certify_bilinear(c * A, BallDomain(1.0, d)).k_theoretical, abs(c) * kb),
                    rel(certify_bilinear(A, BallDomain(c, d)).k_theoretical, c * kb),
                )
        info["detail"] = f"max rel err={worst:.2e}"
        assert worst <= 1e-8


def test_7_factor_norm_cross_check(criterion, psd_matrices):
    with criterion(7, "||L||_2^2 = ||M||_2") as info:
        worst = 0.0
        for _, M in psd_matrices:
            lhs = spectral_norm(psd_factor(M).factor) ** 2
            rhs = spectral_norm(M)
            worst = max(worst, abs(lhs - rhs) / rhs)
        info["detail"] = f"max rel err={worst:.2e}"
        assert worst <= 1e-8


CLI_CASES = [
    ("certify_identity", ["--metric", "mahalanobis", "--matrix", "data/id2.csv"], 0),
    ("certify_nilpotent_bilinear", ["--metric", "bilinear", "--matrix", "data/nil.csv", "--radius", "3"], 0),
    ("certify_indefinite", ["--metric", "mahalanobis", "--matrix", "data/indef.csv"], 2),
]


def test_8_cli_contract(criterion):
    with criterion(8, "CLI golden reports and exit codes") as info:
        env = {k: v for k, v in os.environ.items() if k != "LIPCERT_SEED"}
        seen = []
        for name, args, code in CLI_CASES:
            proc = subprocess.run([sys.executable, "-m", "lipcert", "certify", *args], cwd=HERE,
                                  capture_output=True, text=True, env=env)
            report = json.loads(proc.stdout)
            report.pop("timings_ms", None)
            report.pop("backend", None)
            expected = json.loads((HERE / "golden" / f"{name}.json").read_text())
            assert proc.returncode == code, (name, proc.stderr)
            assert report == expected, name
            seen.append(f"{name}:{proc.returncode}")
        info["detail"] = ", ".join(seen)
