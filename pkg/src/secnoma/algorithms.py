"""The two SCA schemes for AN-aided secure NOMA beamforming.

``run_algorithm1`` iterates the SDR-based convex restriction and recovers
beamformers by eigen-factorization or Gaussian randomization.
``run_algorithm2`` adds a linearized ``Tr(W) - lambda_max(W)`` cost that
drives the covariances to rank one.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conic import (
    LinearizationPoint,
    build_p3,
    build_p5,
    penalty_value,
    scaling_hint,
    solve_with_fallback,
)
from .errors import InfeasibleError, RandomizationFailure
from .hermitian import max_eigenpair, rank_one_defect
from .model import (
    ChannelRealization,
    CovarianceDesign,
    EhModel,
    Requirements,
    VectorDesign,
    eh_input_threshold,
    harvest_curve,
    link_powers,
    rates_from_links,
    verify_design,
)

log = logging.getLogger(__name__)

FEAS_TOL = 1e-6
ALPHA_CAP = 1e6
STAGNATION_TOL = 1e-8
INIT_RANGE_DB = 30.0
# scale searches start this far below the harvesting threshold, so the
# bisection lands on the threshold itself instead of a fixed margin above it
EH_BRACKET = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    xi: float = 1e-4
    max_iters: int = 50
    alpha0: float = 1.0
    rand_samples: int = 1000
    rank_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if self.rand_samples < 1:
            raise ValueError("rand_samples must be at least 1")
        if not 0 < self.rank_tol < 1:
            raise ValueError("rank_tol must lie in (0, 1)")


@dataclass
class SolveReport:
    algorithm: str
    status: str  # converged | max-iters | infeasible | numerical-failure | randomization-failure
    objective_trajectory: list = field(default_factory=list)
    power_trajectory: list = field(default_factory=list)
    alpha_trajectory: list = field(default_factory=list)
    defect_trajectory: list = field(default_factory=list)
    covariance: CovarianceDesign | None = None
    vector: VectorDesign | None = None
    rank_one: tuple = (False, False)
    iterations: int = 0
    wall_time: float = 0.0
    initial_power: float = math.nan
    relaxed_power: float = math.nan
    message: str = ""
    extra: dict = field(default_factory=dict)
    # solver-optimal covariance iterates, in order (not serialized)
    iterates: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_power(self) -> float:
        if self.vector is not None:
            return self.vector.total_power
        return self.relaxed_power

    def summary(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "status": self.status,
            "final_power_W": self.final_power,
            "relaxed_power_W": self.relaxed_power,
            "iterations": self.iterations,
            "rank_one": list(self.rank_one),
            "wall_time_s": self.wall_time,
            "message": self.message,
        }

    def to_dict(self) -> dict:
        d = self.summary()
        d.update(
            objective_trajectory=list(self.objective_trajectory),
            power_trajectory=list(self.power_trajectory),
            alpha_trajectory=list(self.alpha_trajectory),
            defect_trajectory=list(self.defect_trajectory),
            initial_power_W=self.initial_power,
            covariance=self.covariance.to_dict() if self.covariance is not None else None,
            vector=self.vector.to_dict() if self.vector is not None else None,
        )
        d.update(self.extra)
        return d


# ---------------------------------------------------------------------------
# initialization


def _q(h, M) -> float:
    return float(np.real(np.vdot(h, M @ h)))


def tight_linearization(design: CovarianceDesign, ch: ChannelRealization) -> LinearizationPoint:
    """Expansion points equal to the exact logs of the linearized trace terms."""
    W1, W2, S = design.W1, design.W2, design.Sigma
    return LinearizationPoint(
        x1_t=math.log(_q(ch.h1, S) + ch.sigma1_sq),
        x2_t=math.log(_q(ch.g, W1 + S) + ch.sigma_e_sq),
        x3_t=math.log(_q(ch.g, W1 + W2 + S) + ch.sigma_e_sq),
        z1_t=math.log(_q(ch.h1, W1 + S) + ch.sigma1_sq),
        z2_t=math.log(_q(ch.h2, W1 + S) + ch.sigma2_sq),
    )


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _null_projector(vectors, n: int) -> np.ndarray:
    """Projector onto the orthogonal complement of span(vectors)."""
    A = np.column_stack(vectors)
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(s.max(), 1e-300)))
    U = u[:, rank:]
    return U @ U.conj().T if U.shape[1] else np.zeros((n, n), dtype=complex)


def _scaled(design: CovarianceDesign, t: float) -> CovarianceDesign:
    return CovarianceDesign(t * design.W1, t * design.W2, t * design.Sigma)


def log_grid_min_scale(ok, t0, db_range=INIT_RANGE_DB, points=61, bisections=40):
    """Smallest ``t >= t0`` (per row) with ``ok(t)`` true, searched on a log grid
    up to ``db_range`` dB above ``t0`` and refined by bisection between the last
    infeasible and the first feasible grid point. ``ok`` maps a vector of
    scales to a boolean vector. NaN where nothing on the grid is feasible.
    """
    t0 = np.asarray(t0, dtype=float)
    factors = 10.0 ** (np.linspace(0.0, db_range, points) / 10.0)
    grid = t0[:, None] * factors[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        feas = np.stack([ok(grid[:, k]) for k in range(points)], axis=1)
    found = feas.any(axis=1) & np.isfinite(t0)
    first = np.argmax(feas, axis=1)
    rows = np.arange(len(t0))
    hi = grid[rows, first]
    lo = np.where(first > 0, grid[rows, np.maximum(first - 1, 0)], hi)
    need = found & (first > 0)
    for _ in range(bisections):
        mid = np.sqrt(lo * hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            good = ok(mid)
        hi = np.where(need & good, mid, hi)
        lo = np.where(need & ~good, mid, lo)
    return np.where(found, hi, np.nan)


def min_feasible_scales(links, ch, req, eh, c, db_range=INIT_RANGE_DB, points=61):
    """Smallest common power scale making each candidate feasible.

    ``links`` holds per-candidate received powers (shape ``(S, 9)``, see
    :func:`rates_from_links`); all of them grow linearly with a common power
    scale ``t``. The search starts at the scale that meets the harvesting
    threshold (see :func:`log_grid_min_scale`).
    """
    links = np.atleast_2d(np.asarray(links, dtype=float))
    gamma_unit = links[:, 6:9].sum(axis=1)
    if c > 0:
        with np.errstate(divide="ignore"):
            t0 = np.where(gamma_unit > 0, c / gamma_unit * (1 - EH_BRACKET), np.nan)
    else:
        total = np.maximum(links.sum(axis=1), 1e-300)
        t0 = 1e-3 * min(ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq) / total

    def ok(t):
        r1, r2 = rates_from_links(links * t[:, None], ch)
        harvested = harvest_curve(t * gamma_unit, eh)
        return (r1 >= req.gamma1) & (r2 >= req.gamma2) & (harvested >= req.upsilon_e)

    return log_grid_min_scale(ok, t0, db_range, points)


def _smallest_feasible_scale(shape: CovarianceDesign, ch, req, eh, c):
    t = min_feasible_scales(link_powers(shape, ch).as_array(), ch, req, eh, c)[0]
    return None if not np.isfinite(t) else float(t)


def _matched_candidate(ch, req, eh, c):
    n = ch.n_antennas
    u1, u2 = _unit(ch.h1), _unit(ch.h2)
    shape = CovarianceDesign(np.outer(u1, u1.conj()), np.outer(u2, u2.conj()), np.eye(n) / n)
    t = _smallest_feasible_scale(shape, ch, req, eh, c)
    return None if t is None else _scaled(shape, t)


def _null_steering_candidate(ch, req, eh, c, margin=1.05):
    """Beams zero-forced at the EHR and AN steered away from both users, with
    powers solved in closed form from the SINR targets."""
    n = ch.n_antennas
    Pg = _null_projector([ch.g], n)
    u1, u2 = _unit(Pg @ ch.h1), _unit(Pg @ ch.h2)
    if np.linalg.norm(u1) == 0 or np.linalg.norm(u2) == 0:
        return None
    Ph = _null_projector([ch.h1, ch.h2], n)
    v = Ph @ ch.g
    if np.linalg.norm(v) < 1e-9 * np.linalg.norm(ch.g):
        # not enough antennas to hide AN from both users; hide it from user 1
        v = _null_projector([ch.h1], n) @ ch.g
    v = _unit(v)

    gv = abs(np.vdot(ch.g, v)) ** 2
    p_an = c / gv * margin if c > 0 else 0.0
    t1 = 2.0 ** req.gamma1 - 1.0
    t2 = 2.0 ** req.gamma2 - 1.0
    a = {(i, j): abs(np.vdot(h, u)) ** 2 for i, h in ((1, ch.h1), (2, ch.h2)) for j, u in ((1, u1), (2, u2))}
    b = {1: abs(np.vdot(ch.h1, v)) ** 2, 2: abs(np.vdot(ch.h2, v)) ** 2}
    s = {1: ch.sigma1_sq, 2: ch.sigma2_sq}
    p1 = margin * t1 * (p_an * b[1] + s[1]) / a[1, 1]
    p2 = margin * max(t2 * (p1 * a[i, 1] + p_an * b[i] + s[i]) / a[i, 2] for i in (1, 2))
    design = CovarianceDesign(
        p1 * np.outer(u1, u1.conj()), p2 * np.outer(u2, u2.conj()), p_an * np.outer(v, v.conj())
    )
    return design if verify_design(design, ch, req, eh, tol=0.0).feasible else None


def _harvest_only_candidate(ch, req, eh, c):
    """AN matched to the EHR, no information beams; feasible only for zero rate targets."""
    n = ch.n_antennas
    gg = float(np.vdot(ch.g, ch.g).real)
    ug = _unit(ch.g)
    p = max(c, 0.0) / gg * (1 + 1e-9) if gg > 0 else 0.0
    z = np.zeros((n, n), dtype=complex)
    design = CovarianceDesign(z, z.copy(), p * np.outer(ug, ug.conj()))
    return design if verify_design(design, ch, req, eh, tol=0.0).feasible else None


def _harvest_beam_candidate(ch, req, eh, c, margin=1.05, passes=4):
    """User 2's beam points at the EHR and carries the harvested power.

    Both users remove s2 by SIC or want it, so only the EHR's ability to decode
    s2 has to be suppressed, which takes a faint AN component hidden from the
    users. User 1's beam is zero-forced at the EHR.
    """
    n = ch.n_antennas
    gg = float(np.vdot(ch.g, ch.g).real)
    u1 = _unit(_null_projector([ch.g], n) @ ch.h1)
    v = _null_projector([ch.h1, ch.h2], n) @ ch.g
    if np.linalg.norm(v) < 1e-9 * np.linalg.norm(ch.g):
        v = _null_projector([ch.h1], n) @ ch.g
    v = _unit(v)
    if gg <= 0 or np.linalg.norm(u1) == 0 or np.linalg.norm(v) == 0:
        return None
    ug = ch.g / math.sqrt(gg)
    gv = abs(np.vdot(ch.g, v)) ** 2
    hs = ((ch.h1, ch.sigma1_sq), (ch.h2, ch.sigma2_sq))
    a1 = abs(np.vdot(ch.h1, u1)) ** 2
    t1 = 2.0 ** req.gamma1 - 1.0
    p2, p_an = max(c, 0.0) / gg, 0.0
    for _ in range(passes):
        p1 = margin * t1 * (p_an * abs(np.vdot(ch.h1, v)) ** 2 + ch.sigma1_sq) / a1
        sinr2 = min(
            p2 * abs(np.vdot(h, ug)) ** 2 / (p1 * abs(np.vdot(h, u1)) ** 2 + p_an * abs(np.vdot(h, v)) ** 2 + s2)
            for h, s2 in hs
        )
        room = (1.0 + sinr2) / 2.0 ** req.gamma2 - 1.0
        if room <= 0:
            return None
        jam = max(p2 * gg / room - ch.sigma_e_sq, 0.0)
        p_an = margin * jam / gv
        p2 = max(c - p_an * gv, 0.0) / gg * (1 + 1e-9)
    design = CovarianceDesign(
        p1 * np.outer(u1, u1.conj()), p2 * np.outer(ug, ug.conj()), p_an * np.outer(v, v.conj())
    )
    return design if verify_design(design, ch, req, eh, tol=0.0).feasible else None


def initialize_linearization(ch: ChannelRealization, req: Requirements, eh: EhModel):
    """Heuristic feasible starting design and the tight expansion points at it.

    Four rank-one heuristics are tried (matched filters with isotropic AN,
    null-steering, harvest-only AN, harvesting through user 2's beam) and the
    cheapest feasible one is kept.
    """
    c = eh_input_threshold(eh, req.upsilon_e)
    cands = [
        f(ch, req, eh, c)
        for f in (
            _matched_candidate,
            _null_steering_candidate,
            _harvest_only_candidate,
            _harvest_beam_candidate,
        )
    ]
    cands = [d for d in cands if d is not None]
    if cands:
        design0 = min(cands, key=lambda d: d.total_power)
    else:
        # start anyway; the first subproblem's slack fallback decides feasibility
        n = ch.n_antennas
        ug = _unit(ch.g)
        p = max(c, 0.0) / max(float(np.vdot(ch.g, ch.g).real), 1e-300)
        design0 = CovarianceDesign(
            np.outer(_unit(ch.h1), _unit(ch.h1).conj()) * p,
            np.outer(_unit(ch.h2), _unit(ch.h2).conj()) * p,
            p * np.outer(ug, ug.conj()) + 1e-3 * p * np.eye(n),
        )
    return design0, tight_linearization(design0, ch)


# ---------------------------------------------------------------------------
# rank-one recovery


def _factor(W) -> np.ndarray:
    lam, v = max_eigenpair(W)
    return math.sqrt(max(lam, 0.0)) * v


def is_rank_one(W, rank_tol: float) -> bool:
    tr = float(np.trace(W).real)
    if tr <= 0:
        return True
    lam, _ = max_eigenpair(W)
    return lam / tr >= 1.0 - rank_tol


def _common_scale(shape: VectorDesign, ch, req, eh, c, tol):
    t = _smallest_feasible_scale(shape.as_covariance(), ch, req, eh, c)
    if t is None:
        return None
    s = math.sqrt(t)
    out = VectorDesign(s * shape.w1, s * shape.w2, t * shape.Sigma)
    return out if verify_design(out, ch, req, eh, tol=tol).feasible else None


def gaussian_randomization(
    design: CovarianceDesign,
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    opts: SolverOptions,
    rng: np.random.Generator | None = None,
) -> VectorDesign:
    """Recover beamformers from relaxed covariances.

    Rank-one covariances are factored directly. Otherwise ``rand_samples``
    candidate pairs are drawn from CN(0, W1) x CN(0, W2), plus the pair of
    principal eigenvectors; each candidate is normalized to deliver its
    covariance's received power at its own user and then all powers (both
    beams and AN) are scaled by one common factor, the smallest that makes the
    design feasible. The cheapest feasible candidate is returned.
    """
    if is_rank_one(design.W1, opts.rank_tol) and is_rank_one(design.W2, opts.rank_tol):
        vec = VectorDesign(_factor(design.W1), _factor(design.W2), design.Sigma)
        if verify_design(vec, ch, req, eh, FEAS_TOL).feasible:
            return vec
    rng = rng if rng is not None else np.random.default_rng(opts.seed)
    c = eh_input_threshold(eh, req.upsilon_e)
    n = ch.n_antennas

    def sqrtm(W):
        vals, vecs = np.linalg.eigh(0.5 * (W + W.conj().T))
        return vecs * np.sqrt(np.clip(vals, 0.0, None))

    L1, L2 = sqrtm(design.W1), sqrtm(design.W2)
    S = opts.rand_samples
    e1 = (rng.standard_normal((S, n)) + 1j * rng.standard_normal((S, n))) / math.sqrt(2)
    e2 = (rng.standard_normal((S, n)) + 1j * rng.standard_normal((S, n))) / math.sqrt(2)
    w1 = np.vstack([_factor(design.W1), e1 @ L1.T])
    w2 = np.vstack([_factor(design.W2), e2 @ L2.T])
    S += 1
    # each beam delivers its covariance's power at its own user
    for w, h, W in ((w1, ch.h1, design.W1), (w2, ch.h2, design.W2)):
        got = np.abs(w @ h.conj()) ** 2
        target = _q(h, W)
        fix = np.where(got > 0, np.sqrt(target / np.where(got > 0, got, 1.0)), 1.0)
        w *= fix[:, None] if target > 0 else 1.0

    def rx(h, w):
        return np.abs(w @ h.conj()) ** 2

    links = np.column_stack(
        [
            rx(ch.h1, w1), rx(ch.h1, w2), np.full(S, _q(ch.h1, design.Sigma)),
            rx(ch.h2, w1), rx(ch.h2, w2), np.full(S, _q(ch.h2, design.Sigma)),
            rx(ch.g, w1), rx(ch.g, w2), np.full(S, _q(ch.g, design.Sigma)),
        ]
    )  # fmt: skip
    t = min_feasible_scales(links, ch, req, eh, c)
    power = t * (np.sum(np.abs(w1) ** 2, axis=1) + np.sum(np.abs(w2) ** 2, axis=1) + np.trace(design.Sigma).real)
    best = None
    for k in np.argsort(np.where(np.isfinite(power), power, np.inf)):
        if not np.isfinite(power[k]):
            break
        s_ = math.sqrt(t[k])
        cand = VectorDesign(s_ * w1[k], s_ * w2[k], t[k] * design.Sigma)
        if verify_design(cand, ch, req, eh, FEAS_TOL).feasible:
            best = cand
            break
    if best is None:
        raise RandomizationFailure(
            f"no feasible candidate among {opts.rand_samples} Gaussian draws"
        )
    return best


# ---------------------------------------------------------------------------
# the SCA loops


class _Incumbent:
    """Cheapest relaxed-feasible covariance design seen so far.

    Every subproblem contains its expansion point, so in exact arithmetic an
    iterate never costs more than the previous one; a solver stopping short
    of full accuracy can return a slightly worse point, and then the earlier
    one is kept.
    """

    def __init__(self, start: CovarianceDesign, ch, req, eh):
        ok = verify_design(start, ch, req, eh, FEAS_TOL).feasible
        self.design = start if ok else None
        self.power = start.total_power if ok else math.inf

    def offer(self, design: CovarianceDesign) -> None:
        if design.total_power < self.power:
            self.design, self.power = design, design.total_power

    def get(self, fallback: CovarianceDesign) -> CovarianceDesign:
        return self.design if self.design is not None else fallback


def _relative_change(new: float, old: float) -> float:
    return abs(new - old) / max(abs(old), 1e-300)


def run_algorithm1(
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    opts: SolverOptions = SolverOptions(),
    start=None,
) -> SolveReport:
    """SDR-based SCA. Stops when the relative change of the total transmit
    power between iterates is at most ``opts.xi``."""
    t0 = time.perf_counter()
    design, lin = start if start is not None else initialize_linearization(ch, req, eh)
    rep = SolveReport(algorithm="sdr", status="max-iters", initial_power=design.total_power)
    best = _Incumbent(design, ch, req, eh)
    prev_power = design.total_power
    for it in range(1, opts.max_iters + 1):
        sol = solve_with_fallback(build_p3(ch, req, eh, lin, hint=scaling_hint(design, ch)))
        if not sol.optimal:
            if it == 1:
                rep.status = sol.status
                rep.message = f"first subproblem {sol.status}"
                rep.wall_time = time.perf_counter() - t0
                return rep
            rep.status = "numerical-failure"
            rep.message = f"iteration {it}: subproblem {sol.status}; kept last iterate"
            break
        design = sol.design()
        rep.iterates.append(design)
        power = design.total_power
        rep.objective_trajectory.append(sol.objective)
        rep.power_trajectory.append(power)
        rep.iterations = it
        best.offer(design)
        lin = tight_linearization(design, ch)
        if _relative_change(power, prev_power) <= opts.xi:
            rep.status = "converged"
            break
        prev_power = power
    design = best.get(design)
    rep.covariance = design
    rep.relaxed_power = design.total_power
    rep.rank_one = (is_rank_one(design.W1, opts.rank_tol), is_rank_one(design.W2, opts.rank_tol))
    try:
        rep.vector = gaussian_randomization(design, ch, req, eh, opts)
    except RandomizationFailure as exc:
        rep.status = "randomization-failure"
        rep.message = str(exc)
    rep.wall_time = time.perf_counter() - t0
    _final_check(rep, ch, req, eh)
    return rep


def rank_defect_ratio(design: CovarianceDesign) -> float:
    """Sum of the two rank-one defects relative to the total transmit power.

    Beams carrying a negligible share of the power (harvesting-only optima)
    count as rank one whatever their shape.
    """
    tr = design.total_power
    if tr <= 0:
        return 0.0
    return (rank_one_defect(design.W1) + rank_one_defect(design.W2)) / tr


def run_algorithm2(
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    opts: SolverOptions = SolverOptions(),
    start=None,
) -> SolveReport:
    """Cost-function SCA. Stops when the summed rank-one defect of the beam
    covariances, relative to the total power, is at most ``opts.xi`` and the total
    power has settled to the same relative tolerance."""
    t0 = time.perf_counter()
    prev, lin = start if start is not None else initialize_linearization(ch, req, eh)
    rep = SolveReport(algorithm="cost", status="max-iters", initial_power=prev.total_power)
    best = _Incumbent(prev, ch, req, eh)
    alpha = opts.alpha0
    prev_power = prev.total_power
    for it in range(1, opts.max_iters + 1):
        p = build_p5(ch, req, eh, lin, prev, alpha, hint=scaling_hint(prev, ch))
        sol = solve_with_fallback(p)
        if not sol.optimal:
            if it == 1:
                rep.status = sol.status
                rep.message = f"first subproblem {sol.status}"
                rep.wall_time = time.perf_counter() - t0
                return rep
            rep.status = "numerical-failure"
            rep.message = f"iteration {it}: subproblem {sol.status}; kept last iterate"
            break
        design = sol.design()
        rep.iterates.append(design)
        power = design.total_power
        defect = rank_defect_ratio(design)
        rep.power_trajectory.append(power)
        rep.objective_trajectory.append(sol.objective)
        rep.alpha_trajectory.append(alpha)
        rep.defect_trajectory.append(defect)
        rep.iterations = it
        change = max(
            float(np.max(np.abs(design.W1 - prev.W1))), float(np.max(np.abs(design.W2 - prev.W2)))
        )
        stagnant = change <= STAGNATION_TOL * max(prev.total_power, 1e-300)
        best.offer(design)
        lin = tight_linearization(design, ch)
        prev = design
        settled = _relative_change(power, prev_power) <= opts.xi
        prev_power = power
        if defect <= opts.xi and (settled or stagnant):
            rep.status = "converged"
            break
        if stagnant:
            alpha = min(2.0 * alpha, ALPHA_CAP)
    prev = best.get(prev)
    rep.covariance = prev
    rep.relaxed_power = prev.total_power
    rep.rank_one = (is_rank_one(prev.W1, opts.rank_tol), is_rank_one(prev.W2, opts.rank_tol))
    try:
        rep.vector = gaussian_randomization(prev, ch, req, eh, opts)
    except RandomizationFailure as exc:
        rep.status = "randomization-failure"
        rep.message = str(exc)
    rep.wall_time = time.perf_counter() - t0
    _final_check(rep, ch, req, eh)
    return rep


def _tighten(vec: VectorDesign, ch, req, eh) -> VectorDesign:
    """Scale all powers by the smallest common factor that keeps ``vec``
    feasible, when that lowers the total power."""
    c = eh_input_threshold(eh, req.upsilon_e)
    out = _common_scale(vec, ch, req, eh, c, FEAS_TOL)
    return out if out is not None and out.total_power < vec.total_power else vec


def _final_check(rep: SolveReport, ch, req, eh) -> None:
    if rep.vector is None:
        return
    rep.vector = _tighten(rep.vector, ch, req, eh)
    fr = verify_design(rep.vector, ch, req, eh, FEAS_TOL)
    rep.extra["feasibility"] = fr.to_dict()
    if rep.status == "converged" and not fr.feasible:
        rep.status = "numerical-failure"
        rep.message = "final design fails verification"


def solve(ch, req, eh, algorithm: str = "sdr", opts: SolverOptions = SolverOptions()) -> SolveReport:
    runner = {"sdr": run_algorithm1, "cost": run_algorithm2}[algorithm]
    return runner(ch, req, eh, opts)


def require_feasible(rep: SolveReport) -> SolveReport:
    if rep.status in ("infeasible",):
        raise InfeasibleError(rep.message or "instance infeasible")
    return rep
