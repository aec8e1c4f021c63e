"""TDMA reference scheme: two equal time slots, slot ``j`` serves user ``j``
alone with its own beam and AN.

Each slot must reach a secrecy rate of ``2 * gamma_j`` (prelog one half) and
the full harvesting threshold, so the two slots decouple and are solved one
after the other. The reported power is the average over the two slots.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .algorithms import (
    EH_BRACKET,
    FEAS_TOL,
    SolveReport,
    SolverOptions,
    _factor,
    _null_projector,
    _relative_change,
    _unit,
    is_rank_one,
    log_grid_min_scale,
)
from .conic import ProgramBuilder, block_congruence, exp_ge, solve_with_fallback, taylor_le
from .model import (
    LN2,
    ChannelRealization,
    EhModel,
    Requirements,
    VectorDesign,
    eh_input_threshold,
    harvest_curve,
    verify_design,
)


@dataclass(frozen=True)
class SlotDesign:
    """Beam ``w`` and AN covariance ``Sigma`` used during one slot."""

    w: np.ndarray
    Sigma: np.ndarray

    @property
    def power(self) -> float:
        return float(np.vdot(self.w, self.w).real + np.trace(self.Sigma).real)

    def to_dict(self) -> dict:
        return {
            "w": [[float(z.real), float(z.imag)] for z in self.w],
            "Sigma": {"re": self.Sigma.real.tolist(), "im": self.Sigma.imag.tolist()},
        }


@dataclass
class TdmaReport(SolveReport):
    slots: list = field(default_factory=list)

    @property
    def final_power(self) -> float:
        if len(self.slots) == 2:
            return 0.5 * sum(s.power for s in self.slots)
        return self.relaxed_power

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["slots"] = [s.to_dict() for s in self.slots]
        return d


def slot_channel(ch: ChannelRealization, user: int) -> ChannelRealization:
    """Channel seen in slot ``user``: both user entries point at the served user."""
    h, sig = ch.user(user)
    return ChannelRealization(h, h, ch.g, sig, sig, ch.sigma_e_sq)


def slot_requirements(req: Requirements, user: int) -> Requirements:
    """Per-slot targets: the slot holds the channel half the time, so its
    instantaneous secrecy rate must be twice the average target."""
    gamma = req.gamma1 if user == 1 else req.gamma2
    return Requirements(gamma1=2.0 * gamma, gamma2=0.0, upsilon_e=req.upsilon_e)


def verify_slot(slot: SlotDesign, ch: ChannelRealization, req: Requirements, eh: EhModel, user: int, tol=FEAS_TOL):
    n = len(slot.w)
    vec = VectorDesign(slot.w, np.zeros(n), slot.Sigma)
    return verify_design(vec, slot_channel(ch, user), slot_requirements(req, user), eh, tol)


def _q(h, M) -> float:
    return float(np.real(np.vdot(h, M @ h)))


def _min_scales(hw, gw, hs, gs, h_sig, ch, target, eh, upsilon, c):
    """Smallest common power scale per candidate meeting the slot rate
    ``target`` and harvesting; NaN when none is found."""
    hw, gw = np.atleast_1d(hw), np.atleast_1d(gw)
    se = ch.sigma_e_sq
    gsum = gw + gs
    if c > 0:
        with np.errstate(divide="ignore"):
            t0 = np.where(gsum > 0, c / gsum * (1 - EH_BRACKET), np.nan)
    else:
        t0 = np.full(hw.shape, 1e-3 * min(h_sig, se) / max(float(np.max(hw + gsum)), 1e-300))

    def ok(t):
        rate = np.log2(1 + t * hw / (t * hs + h_sig)) - np.log2(1 + t * gw / (t * gs + se))
        return (rate >= target) & (harvest_curve(t * gsum, eh) >= upsilon)

    return log_grid_min_scale(ok, t0)


def _scaled_slot(w, S, t) -> SlotDesign:
    return SlotDesign(math.sqrt(t) * w, t * S)


def _harvest_beam_shape(h, h_sig, ch, target, c, v, margin=1.05):
    """Beam along g carrying the harvested power, with just enough AN along
    ``v`` (orthogonal to h) to keep the EHR's SINR below the secrecy margin."""
    g, se = ch.g, ch.sigma_e_sq
    gg = float(np.vdot(g, g).real)
    gv = abs(np.vdot(g, v)) ** 2
    if c <= 0 or gg <= 0 or gv <= 0:
        return None
    ug = g / math.sqrt(gg)
    p = c / gg
    snr = p * abs(np.vdot(h, ug)) ** 2 / h_sig
    # (1 + snr) / (1 + c / (jam + se)) >= 2^target
    b_max = (1.0 + snr) / (margin * 2.0**target) - 1.0
    if b_max <= 0:
        return None
    jam = max(c / b_max - se, 0.0) * margin / gv
    return math.sqrt(p) * ug, jam * np.outer(v, v.conj())


def _slot_candidates(h, h_sig, ch, target, eh, upsilon, c):
    """Feasible starting points: beam zero-forced at the EHR with AN steered
    away from the user, a matched beam with AN along the EHR, and a beam along
    the EHR that carries the harvested power."""
    n = ch.n_antennas
    g = ch.g
    out = []
    u = _unit(_null_projector([g], n) @ h)
    v = _unit(_null_projector([h], n) @ g)
    if np.linalg.norm(v) == 0:
        v = _unit(g)
    shapes = []
    if np.linalg.norm(u) > 0:
        shapes.append((u, np.outer(v, v.conj())))
    ug = _unit(g)
    shapes.append((_unit(h), np.outer(ug, ug.conj())))
    hb = _harvest_beam_shape(h, h_sig, ch, target, c, v)
    if hb is not None:
        shapes.append(hb)
    for w, S in shapes:
        hw, gw = abs(np.vdot(h, w)) ** 2, abs(np.vdot(g, w)) ** 2
        for beam in (1.0, 1e-2, 1e2):
            # beam/AN power ratio is a free shape parameter; try a few
            wb = math.sqrt(beam) * w
            t = _min_scales(beam * hw, beam * gw, _q(h, S), _q(g, S), h_sig, ch, target, eh, upsilon, c)[0]
            if np.isfinite(t):
                out.append(_scaled_slot(wb, S, t))
    return out


def _slot_program(h, h_sig, ch, target, c, lin, hint):
    """Convex restriction of one slot at the expansion points ``lin``."""
    n = ch.n_antennas
    g, se = ch.g, ch.sigma_e_sq
    H, G = np.outer(h, h.conj()), ch.G
    xa_t, xb_t = lin
    off = hint["offsets"]
    gg = float(np.vdot(g, g).real) or 1.0
    hh = float(np.vdot(h, h).real) or 1.0
    b = ProgramBuilder(max(c / gg if c > 0 else 0.0, h_sig / hh))
    ea, ed = math.exp(off["a"]), math.exp(off["d"])
    probes = {
        "W": [(h, ea), (g, min(math.exp(xb_t), c if c > 0 else math.inf))],
        "Sigma": [(h, min(math.exp(xa_t), ea)), (g, min(math.exp(xb_t), ed, c if c > 0 else math.inf))],
    }
    W, S = (
        b.matrix(nm, n, block_congruence(n, probes[nm], b.power_scale, hint["blocks"][nm]))
        for nm in ("W", "Sigma")
    )
    xa = b.scalar("xa", xa_t)
    xb = b.scalar("xb", xb_t)
    a = b.scalar("a", off["a"])
    d = b.scalar("d", off["d"])
    b.minimize({W: np.eye(n), S: np.eye(n)})
    terms = {xa: 1, xb: 1, a: -1, d: -1}
    shift = sum(k * b.log_offsets[v] for v, k in terms.items())
    b.le(terms, -target * LN2 - shift, "slot_rate")
    taylor_le(b, {S: H}, h_sig, xa, xa_t, "taylor_xa")
    taylor_le(b, {W: G, S: G}, se, xb, xb_t, "taylor_xb")
    if c > 0:
        norm = b.power_scale * gg
        b.ge({W: G / norm, S: G / norm}, c / norm, "eh_threshold")
    exp_ge(b, a, {W: H, S: H}, h_sig, off["a"], "exp_a")
    exp_ge(b, d, {S: G}, se, off["d"], "exp_d")
    return b.build()


def _slot_state(h, h_sig, ch, W, S):
    se = ch.sigma_e_sq
    lin = (math.log(_q(h, S) + h_sig), math.log(_q(ch.g, W + S) + se))
    hint = {
        "offsets": {"a": math.log(_q(h, W + S) + h_sig), "d": math.log(_q(ch.g, S) + se)},
        "blocks": {"W": W, "Sigma": S},
    }
    return lin, hint


def _recover_slot(W, S, h, h_sig, ch, target, eh, upsilon, c, opts, rng):
    """Beam for one slot: the principal factor of ``W`` plus Gaussian draws,
    each rescaled by the smallest feasible common power factor."""
    n = ch.n_antennas
    vals, vecs = np.linalg.eigh(0.5 * (W + W.conj().T))
    L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    cands = [_factor(W)]
    if not is_rank_one(W, opts.rank_tol):
        k = opts.rand_samples
        e = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / math.sqrt(2)
        cands.extend(e @ L.T)
    w = np.array(cands)
    got = np.abs(w @ h.conj()) ** 2
    want = _q(h, W)
    if want > 0:
        w *= np.sqrt(want / np.where(got > 0, got, 1.0))[:, None]
    hw, gw = np.abs(w @ h.conj()) ** 2, np.abs(w @ ch.g.conj()) ** 2
    t = _min_scales(hw, gw, _q(h, S), _q(ch.g, S), h_sig, ch, target, eh, upsilon, c)
    power = t * (np.sum(np.abs(w) ** 2, axis=1) + np.trace(S).real)
    order = np.argsort(np.where(np.isfinite(power), power, np.inf))
    return [_scaled_slot(w[i], S, t[i]) for i in order if np.isfinite(power[i])]


def _solve_slot(ch, req, eh, user, opts, rng):
    """SCA for one slot. Returns (slot design or None, power trajectory, status)."""
    h, h_sig = ch.user(user)
    target = 2.0 * (req.gamma1 if user == 1 else req.gamma2)
    c = eh_input_threshold(eh, req.upsilon_e)
    starts = [s for s in _slot_candidates(h, h_sig, ch, target, eh, req.upsilon_e, c)
              if verify_slot(s, ch, req, eh, user, tol=0.0).feasible]
    if not starts:
        return None, [], "infeasible", 0
    start = min(starts, key=lambda s: s.power)
    W, S = np.outer(start.w, start.w.conj()), start.Sigma
    traj, status, iters = [], "max-iters", 0
    prev = start.power
    # cheapest iterate so far; a solver stopping short can return a worse point
    best = (prev, W, S)
    for it in range(1, opts.max_iters + 1):
        lin, hint = _slot_state(h, h_sig, ch, W, S)
        sol = solve_with_fallback(_slot_program(h, h_sig, ch, target, c, lin, hint), ("taylor_xa", "taylor_xb"))
        if not sol.optimal:
            status = sol.status if it == 1 else "numerical-failure"
            if it == 1:
                return None, traj, status, it
            break
        W, S = sol.matrices["W"], sol.matrices["Sigma"]
        power = float(np.trace(W).real + np.trace(S).real)
        traj.append(power)
        iters = it
        if power < best[0]:
            best = (power, W, S)
        if _relative_change(power, prev) <= opts.xi:
            status = "converged"
            break
        prev = power
    _, W, S = best
    for cand in _recover_slot(W, S, h, h_sig, ch, target, eh, req.upsilon_e, c, opts, rng):
        if verify_slot(cand, ch, req, eh, user).feasible:
            return cand, traj, status, iters
    # the starting point is always feasible
    return start, traj, "randomization-failure" if status == "converged" else status, iters


def tdma_min_power(
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    opts: SolverOptions = SolverOptions(),
) -> TdmaReport:
    """Minimum slot-averaged transmit power of the two-slot TDMA scheme."""
    t0 = time.perf_counter()
    eh_input_threshold(eh, req.upsilon_e)  # raises when the target is unattainable
    rng = np.random.default_rng(opts.seed)
    rep = TdmaReport(algorithm="tdma", status="converged")
    trajs = []
    for user in (1, 2):
        slot, traj, status, iters = _solve_slot(ch, req, eh, user, opts, rng)
        rep.iterations = max(rep.iterations, iters)
        trajs.append(traj)
        if status != "converged":
            rep.status = status
            rep.message = f"slot {user}: {status}"
        if slot is None:
            rep.slots = []
            rep.wall_time = time.perf_counter() - t0
            return rep
        rep.slots.append(slot)
    k = max(len(t) for t in trajs)
    if k:
        pad = [t + [t[-1]] * (k - len(t)) if t else [math.nan] * k for t in trajs]
        rep.power_trajectory = [0.5 * (a + b) for a, b in zip(*pad)]
        rep.objective_trajectory = list(rep.power_trajectory)
        rep.relaxed_power = rep.power_trajectory[-1]
    feas = [verify_slot(s, ch, req, eh, u).to_dict() for u, s in zip((1, 2), rep.slots)]
    rep.extra["slot_feasibility"] = feas
    if rep.status == "converged" and not all(f["feasible"] for f in feas):
        rep.status = "numerical-failure"
        rep.message = "final slot design fails verification"
    rep.wall_time = time.perf_counter() - t0
    return rep
