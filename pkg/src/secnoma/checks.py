"""Self-contained property suites run by ``secnoma check``.

Each suite draws its own seeded random inputs and returns a
:class:`CheckResult`; none of them calls a conic solver, so the whole set
runs in a few seconds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .hermitian import max_eigenpair, rank_one_defect, realify
from .model import (
    ChannelRealization,
    CovarianceDesign,
    EhModel,
    c4_fraction,
    c5_fractions,
    eh_input_threshold,
    harvest_curve,
    secrecy_rates,
    user2_secrecy_legs,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_psd(rng, n: int, rank: int | None = None) -> np.ndarray:
    A = _cn(rng, n, rank or n)
    return A @ A.conj().T


def random_hermitian(rng, n: int) -> np.ndarray:
    A = _cn(rng, n, n)
    return 0.5 * (A + A.conj().T)


def check_eh_roundtrip(eh: EhModel = EhModel(), upsilon: float = 1e-3) -> CheckResult:
    c = eh_input_threshold(eh, upsilon)
    err = abs(harvest_curve(c, eh) - upsilon)
    return CheckResult("eh-roundtrip", err <= 1e-9, f"c = {c:.6e} W, |Phi(c) - target| = {err:.2e} W")


def check_rate_identity(count: int = 1000, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 9))
        h1, h2, g = _cn(rng, n), _cn(rng, n), _cn(rng, n)
        if np.linalg.norm(h1) < np.linalg.norm(h2):
            h1, h2 = h2, h1
        noise = 10.0 ** rng.uniform(-3, 0, size=3)
        ch = ChannelRealization(h1, h2, g, *noise)
        d = CovarianceDesign(*(random_psd(rng, n, int(rng.integers(1, n + 1))) for _ in range(3)))
        r1, _ = secrecy_rates(d, ch)
        legs = user2_secrecy_legs(d, ch)
        f1 = c4_fraction(d, ch)
        fa, fb = c5_fractions(d, ch)
        for rate, frac in ((r1, f1), (legs[0], fa), (legs[1], fb)):
            worst = max(worst, abs(2.0 ** (-rate) - frac) / max(1.0, abs(frac)))
    return CheckResult("rate-identity", worst <= 1e-10, f"max |2^-R - fraction| = {worst:.2e} over {count} instances")


def check_lemma1(count: int = 1000, seed: int = 2) -> CheckResult:
    """``lambda_max(X) - lambda_max(Y) >= y^H (X - Y) y`` for the top eigenvector y of Y."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(count):
        n = int(rng.integers(1, 9))
        X = random_psd(rng, n, int(rng.integers(1, n + 1)))
        Y = random_psd(rng, n, int(rng.integers(1, n + 1)))
        lx, _ = max_eigenpair(X)
        ly, y = max_eigenpair(Y)
        gap = (lx - ly) - float(np.real(np.vdot(y, (X - Y) @ y)))
        worst = min(worst, gap)
    return CheckResult("lemma1", worst >= -1e-9, f"min slack = {worst:.2e} over {count} pairs")


def check_taylor(count: int = 100_000, seed: int = 3) -> CheckResult:
    """``exp(t) (x - t + 1) <= exp(x)``, relative to ``exp(x)``."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-50, 50, count)
    t = x + rng.uniform(-20, 20, count)
    lhs = np.exp(t - x) * (x - t + 1.0)  # divided by exp(x)
    worst = float(np.max(lhs - 1.0))
    return CheckResult("taylor-underestimator", worst <= 1e-12, f"max (lhs - exp(x)) / exp(x) = {worst:.2e} over {count} points")


def check_rank_one_defect(count: int = 1000, seed: int = 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_outer, worst_neg = 0.0, 0.0
    for _ in range(count):
        n = int(rng.integers(1, 9))
        w = _cn(rng, n) * 10.0 ** rng.uniform(-3, 3)
        W = np.outer(w, w.conj())
        worst_outer = max(worst_outer, rank_one_defect(W) / max(np.vdot(w, w).real, 1e-300))
        worst_neg = min(worst_neg, rank_one_defect(random_psd(rng, n)))
    ok = worst_neg >= 0 and worst_outer <= 1e-12
    return CheckResult("rank-one-defect", ok, f"max relative defect of outer products = {worst_outer:.2e}, min defect = {worst_neg:.2e}")


def check_realify(count: int = 100, seed: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 9))
        A = random_hermitian(rng, n)
        ev = np.linalg.eigvalsh(A)
        doubled = np.sort(np.repeat(ev, 2))
        er = np.linalg.eigvalsh(realify(A))
        worst = max(worst, float(np.max(np.abs(er - doubled))) / max(1.0, float(np.max(np.abs(ev)))))
    return CheckResult("realify-spectrum", worst <= 1e-10, f"max eigenvalue mismatch = {worst:.2e} over {count} matrices")


SUITES = (
    check_eh_roundtrip,
    check_rate_identity,
    check_lemma1,
    check_taylor,
    check_rank_one_defect,
    check_realify,
)


def run_checks() -> list[CheckResult]:
    out = []
    for fn in SUITES:
        t0 = time.perf_counter()
        res = fn()
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
