"""Convex subproblems of the SCA schemes as a small solver-neutral conic program.

A :class:`ConicProgram` holds a real decision vector, a linear objective,
linear inequalities ``a.x <= b``, exponential-cone constraints
``exp(u.x + u0) <= v.x + v0`` and PSD blocks. A PSD block owns ``N*N`` real
parameters describing a complex Hermitian matrix; the solver receives its
real ``2N x 2N`` embedding.

Internally matrices are stored in units of ``power_scale`` Watts and every
log auxiliary is shifted by a reference log-power, so that all rows are of
order one even when noise sits at -120 dBm and the harvester needs mW.
Both transforms are exact and undone on extraction.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hermitian import derealify, max_eigenpair, psd_part, realify
from .model import (
    LN2,
    ChannelRealization,
    CovarianceDesign,
    EhModel,
    Requirements,
    eh_input_threshold,
)

# ---------------------------------------------------------------------------
# Hermitian parametrization


@lru_cache(maxsize=None)
def hermitian_basis(n: int) -> np.ndarray:
    """Real basis ``E_k`` (shape ``(n*n, n, n)``) of the n x n Hermitian matrices.

    Order: the n diagonal units, then ``e_i e_j^H + e_j e_i^H`` for i < j,
    then ``1j (e_i e_j^H - e_j e_i^H)`` for i < j.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    E = np.zeros((n * n, n, n), dtype=complex)
    for k in range(n):
        E[k, k, k] = 1.0
    for m, (i, j) in enumerate(pairs):
        E[n + m, i, j] = E[n + m, j, i] = 1.0
        E[n + len(pairs) + m, i, j] = 1j
        E[n + len(pairs) + m, j, i] = -1j
    E.setflags(write=False)
    return E


def hermitian_to_params(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    n = X.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([np.diag(X).real, X[iu].real, X[iu].imag])


def params_to_hermitian(p, n: int) -> np.ndarray:
    return np.tensordot(np.asarray(p, dtype=float), hermitian_basis(n), axes=1)


def trace_coefficients(A) -> np.ndarray:
    """Vector ``t`` with ``Re Tr(A X) = t . params(X)`` for Hermitian ``A``."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    # Tr(A E_k) for the three basis families
    return np.concatenate([np.diag(A).real, 2.0 * A[iu].real, 2.0 * A[iu].imag])


def svec_indices(m: int):
    """Upper triangle, column by column (the PSD-triangle layout)."""
    rows, cols = [], []
    for j in range(m):
        for i in range(j + 1):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def svec(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    r, c = svec_indices(S.shape[0])
    w = np.where(r == c, 1.0, math.sqrt(2.0))
    return S[r, c] * w


def smat(v, m: int) -> np.ndarray:
    r, c = svec_indices(m)
    w = np.where(r == c, 1.0, 1.0 / math.sqrt(2.0))
    S = np.zeros((m, m))
    S[r, c] = np.asarray(v) * w
    S[c, r] = S[r, c]
    return S


@lru_cache(maxsize=None)
def embedding_operator(n: int) -> np.ndarray:
    """Matrix ``M`` with ``svec(realify(X)) = M @ params(X)``."""
    E = hermitian_basis(n)
    M = np.stack([svec(realify(E[k])) for k in range(n * n)], axis=1)
    M.setflags(write=False)
    return M


# ---------------------------------------------------------------------------
# Program representation


@dataclass(frozen=True)
class LinearizationPoint:
    """Taylor expansion points (natural log of Watts)."""

    x1_t: float
    x2_t: float
    x3_t: float
    z1_t: float
    z2_t: float

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not math.isfinite(v):
                raise ValueError(f"expansion point {k} is not finite")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExpCone:
    """``exp(u . x + u0) <= v . x + v0``."""

    u: np.ndarray
    u0: float
    v: np.ndarray
    v0: float
    label: str


@dataclass
class PsdBlock:
    name: str
    n: int
    start: int

    @property
    def stop(self) -> int:
        return self.start + self.n * self.n

    @property
    def real_dim(self) -> int:
        return 2 * self.n


@dataclass
class ConicProgram:
    n_vars: int
    objective: np.ndarray
    objective_const: float
    A: np.ndarray  # linear rows, A x <= b
    b: np.ndarray
    linear_labels: list
    psd: list
    exp_cones: list
    variables: dict  # name -> slice
    power_scale: float = 1.0
    log_offsets: dict = field(default_factory=dict)
    slack_names: tuple = ()
    congruence: dict = field(default_factory=dict)  # name -> T, X = scale * T Xhat T^H

    def trace_row(self, name: str, A) -> np.ndarray:
        """Coefficients of ``Re Tr(A X)`` (in units of ``power_scale``) on block ``name``."""
        T = self.congruence.get(name)
        A = np.asarray(A, dtype=complex)
        if T is not None:
            A = T.conj().T @ A @ T
        return trace_coefficients(A)

    def unscale_matrix(self, name: str, Xhat) -> np.ndarray:
        T = self.congruence.get(name)
        X = Xhat if T is None else T @ Xhat @ T.conj().T
        return self.power_scale * 0.5 * (X + X.conj().T)

    def validate(self) -> None:
        n = self.n_vars
        if self.objective.shape != (n,) or not np.all(np.isfinite(self.objective)):
            raise ValueError("objective must be a finite vector over all variables")
        if self.A.shape != (len(self.b), n):
            raise ValueError("linear constraint matrix has the wrong shape")
        if len(self.linear_labels) != len(self.b):
            raise ValueError("one label per linear row is required")
        for cone in self.exp_cones:
            if cone.u.shape != (n,) or cone.v.shape != (n,):
                raise ValueError(f"exponential cone {cone.label} references undeclared variables")
        for blk in self.psd:
            if blk.stop > n or blk.real_dim % 2:
                raise ValueError(f"PSD block {blk.name} is malformed")

    @property
    def n_linear(self) -> int:
        return len(self.b)

    @property
    def n_scalars(self) -> int:
        return sum(
            1 for k, s in self.variables.items() if s.stop - s.start == 1 and k not in self.slack_names
        )

    def summary(self) -> dict:
        return {
            "variables": self.n_vars,
            "psd_blocks": [b.real_dim for b in self.psd],
            "scalar_auxiliaries": self.n_scalars,
            "exp_cones": len(self.exp_cones),
            "linear": self.n_linear,
        }


class ProgramBuilder:
    """Incremental construction of a :class:`ConicProgram`."""

    def __init__(self, power_scale: float = 1.0):
        self.power_scale = float(power_scale)
        self.n = 0
        self.variables: dict[str, slice] = {}
        self.psd: list[PsdBlock] = []
        self.log_offsets: dict[str, float] = {}
        self._rows: list[tuple[dict, float, str]] = []
        self._exp: list[tuple[dict, float, dict, float, str]] = []
        self._obj: dict = {}
        self._obj_const = 0.0
        self.congruence: dict[str, np.ndarray] = {}

    # variables -------------------------------------------------------------
    def matrix(self, name: str, n: int, congruence=None) -> str:
        """Hermitian PSD block; with ``congruence`` T the block stores ``Xhat``
        where ``X = power_scale * T Xhat T^H`` (exact for invertible T)."""
        if congruence is not None:
            self.congruence[name] = np.asarray(congruence, dtype=complex)
        self.variables[name] = slice(self.n, self.n + n * n)
        self.psd.append(PsdBlock(name, n, self.n))
        self.n += n * n
        return name

    def scalar(self, name: str, log_offset: float | None = None) -> str:
        self.variables[name] = slice(self.n, self.n + 1)
        self.n += 1
        if log_offset is not None:
            self.log_offsets[name] = float(log_offset)
        return name

    # affine expressions are dicts name -> coefficient (float or Hermitian matrix)
    def _dense(self, terms: dict) -> np.ndarray:
        out = np.zeros(self.n)
        for name, coef in terms.items():
            sl = self.variables[name]
            if np.ndim(coef) == 2:
                T = self.congruence.get(name)
                A = np.asarray(coef, dtype=complex)
                if T is not None:
                    A = T.conj().T @ A @ T
                out[sl] += self.power_scale * trace_coefficients(A)
            else:
                out[sl] += float(coef)
        return out

    def le(self, terms: dict, rhs: float, label: str) -> None:
        """``sum(terms) <= rhs``; a matrix coefficient ``A`` on ``X`` means ``Tr(A X)``."""
        self._rows.append((dict(terms), float(rhs), label))

    def ge(self, terms: dict, rhs: float, label: str) -> None:
        self.le({k: _neg(v) for k, v in terms.items()}, -rhs, label)

    def exp_le(self, u: dict, u0: float, v: dict, v0: float, label: str) -> None:
        self._exp.append((dict(u), float(u0), dict(v), float(v0), label))

    def minimize(self, terms: dict, const: float = 0.0) -> None:
        self._obj = dict(terms)
        self._obj_const = float(const)

    def build(self) -> ConicProgram:
        rows = [(self._dense(t), r, lab) for t, r, lab in self._rows]
        A = np.array([r[0] for r in rows]) if rows else np.zeros((0, self.n))
        p = ConicProgram(
            n_vars=self.n,
            # objective in units of power_scale so it is of order one
            objective=self._dense(self._obj) / self.power_scale,
            objective_const=self._obj_const,
            A=A,
            b=np.array([r[1] for r in rows]),
            linear_labels=[r[2] for r in rows],
            psd=list(self.psd),
            exp_cones=[
                ExpCone(self._dense(u), u0, self._dense(v), v0, lab)
                for u, u0, v, v0, lab in self._exp
            ],
            variables=dict(self.variables),
            power_scale=self.power_scale,
            log_offsets=dict(self.log_offsets),
            congruence=dict(self.congruence),
        )
        p.validate()
        return p


def _neg(c):
    return -np.asarray(c) if np.ndim(c) == 2 else -float(c)


# ---------------------------------------------------------------------------
# P3 / P5


def _power_scale(ch: ChannelRealization, c: float) -> float:
    gg = float(np.vdot(ch.g, ch.g).real)
    hh = float(np.vdot(ch.h2, ch.h2).real)
    floor = min(ch.sigma1_sq, ch.sigma2_sq) / max(hh, 1e-300)
    return max(c / gg if gg > 0 else 0.0, floor)


SPAN_MARGIN = 1e2


@dataclass(frozen=True)
class ScalingHint:
    """Magnitudes seen at the previous iterate, used only to condition the
    next subproblem: log offsets for the exp-cone variables and the previous
    covariance blocks. Any hint gives the same optimum."""

    offsets: dict
    blocks: dict


def _qf(v, X) -> float:
    return float(np.real(np.vdot(v, X @ v)))


def scaling_hint(design: CovarianceDesign, ch: ChannelRealization) -> ScalingHint:
    W1, W2, S = design.W1, design.W2, design.Sigma
    s1, s2, se = ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq
    offsets = {
        "y1": math.log(_qf(ch.h1, W1 + S) + s1),
        "y2": math.log(_qf(ch.g, S) + se),
        "y3": math.log(_qf(ch.g, W1 + S) + se),
        "q1": math.log(_qf(ch.h1, W1 + W2 + S) + s1),
        "q2": math.log(_qf(ch.h2, W1 + W2 + S) + s2),
    }
    return ScalingHint(offsets, {"W1": W1, "W2": W2, "Sigma": S})


def _user_span(ch: ChannelRealization) -> np.ndarray:
    A = np.column_stack([ch.h1, ch.h2])
    u, sv, _ = np.linalg.svd(A, full_matrices=False)
    keep = sv > 1e-12 * max(sv.max(), 1e-300)
    U = u[:, keep]
    return U @ U.conj().T


def block_metric(n: int, probes, power_scale: float) -> np.ndarray:
    """Largest-ish ``F <= I`` with ``v^H F v <= level / power_scale`` for every
    ``(v, level)`` in ``probes``.

    Each probe shrinks ``F`` along ``F v`` only; shrinking never increases any
    quadratic form, so earlier probes stay satisfied.
    """
    F = np.eye(n, dtype=complex)
    for v, level in sorted(probes, key=lambda p: p[1]):
        v = np.asarray(v, dtype=complex)
        Fv = F @ v
        vFv = float(np.real(np.vdot(v, Fv)))
        r = level / (power_scale * vFv) if vFv > 0 else 1.0
        if r < 1.0:
            F = F - (1.0 - r) * np.outer(Fv, Fv.conj()) / vFv
    return 0.5 * (F + F.conj().T)


def block_congruence(n: int, probes, power_scale: float, previous=None) -> np.ndarray:
    """Invertible ``T`` with ``X = power_scale * T Xhat T^H``.

    Quadratic forms ``v^H X v`` enter the rows at very different levels (user
    noise against harvested power). ``T^2`` is :func:`block_metric` plus, when
    the previous block is known, ``SPAN_MARGIN`` times it: directions already in
    use keep their magnitude with room to grow, sensitive ones are resolved at
    their own level, and the rest stay at the common power scale.
    """
    M = block_metric(n, probes, power_scale)
    if previous is not None:
        M = M + SPAN_MARGIN * np.asarray(previous, dtype=complex) / power_scale
    vals, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    vals = np.sqrt(np.clip(vals, 1e-300, SPAN_MARGIN))
    return (vecs * vals) @ vecs.conj().T


def taylor_le(b: ProgramBuilder, expr: dict, const: float, var: str, point: float, label: str):
    """``expr + const <= exp(point) (var - point + 1)`` with ``var`` stored as ``var - point``.

    Dividing through by ``exp(point)`` keeps the row of order one.
    """
    scale = math.exp(-point)
    terms = {k: np.asarray(v) * scale if np.ndim(v) == 2 else v * scale for k, v in expr.items()}
    terms[var] = terms.get(var, 0.0) - 1.0
    b.le(terms, 1.0 - const * scale, label)


def exp_ge(b: ProgramBuilder, var: str, expr: dict, const: float, offset: float, label: str):
    """``exp(var) <= expr + const`` with ``var`` stored shifted by ``offset``."""
    scale = math.exp(-offset)
    v = {k: np.asarray(c) * scale for k, c in expr.items()}
    b.exp_le({var: 1.0}, 0.0, v, const * scale, label)


def build_p3(
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    lin: LinearizationPoint,
    power_scale: float | None = None,
    hint: ScalingHint | None = None,
) -> ConicProgram:
    """Convex restriction of the relaxed power-minimization problem at ``lin``.

    Variables are the three covariance matrices and the ten log auxiliaries
    ``x1 x2 x3 y1 y2 y3 z1 z2 q1 q2``. The two rate constraints with an
    exponential of a sum are taken in log form, which is linear.
    """
    c = eh_input_threshold(eh, req.upsilon_e)
    n = ch.n_antennas
    b = ProgramBuilder(power_scale or _power_scale(ch, c))
    default = {"y1": lin.x1_t, "y2": lin.x2_t, "y3": lin.x3_t, "q1": lin.z1_t, "q2": lin.z2_t}
    off = dict(default, **(hint.offsets if hint is not None else {}))
    prev = hint.blocks if hint is not None else {}
    e = {k: math.exp(v) for k, v in off.items()}
    h1, h2, g = ch.h1, ch.h2, ch.g
    # (vector, smallest level at which a row reads v^H X v) per block
    probes = {
        "W1": [
            (h1, min(math.exp(lin.z1_t), e["y1"], e["q1"])),
            (h2, min(math.exp(lin.z2_t), e["q2"])),
            (g, min(math.exp(lin.x2_t), math.exp(lin.x3_t), e["y3"], c)),
        ],
        "W2": [(h1, e["q1"]), (h2, e["q2"]), (g, min(math.exp(lin.x3_t), c))],
        "Sigma": [
            (h1, min(math.exp(lin.x1_t), math.exp(lin.z1_t), e["y1"], e["q1"])),
            (h2, min(math.exp(lin.z2_t), e["q2"])),
            (g, min(math.exp(lin.x2_t), math.exp(lin.x3_t), e["y2"], e["y3"], c)),
        ],
    }
    W1, W2, S = (
        b.matrix(nm, n, block_congruence(n, probes[nm], b.power_scale, prev.get(nm)))
        for nm in ("W1", "W2", "Sigma")
    )
    H1, H2, G = ch.H1, ch.H2, ch.G
    s1, s2, se = ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq

    x1 = b.scalar("x1", lin.x1_t)
    x2 = b.scalar("x2", lin.x2_t)
    x3 = b.scalar("x3", lin.x3_t)
    y1, y2, y3, q1, q2 = (b.scalar(k, off[k]) for k in ("y1", "y2", "y3", "q1", "q2"))
    z1 = b.scalar("z1", lin.z1_t)
    z2 = b.scalar("z2", lin.z2_t)

    b.minimize({W1: np.eye(n), W2: np.eye(n), S: np.eye(n)})

    # rows are in stored (offset-shifted) variables, so the offsets move to the rhs
    def rate_row(terms, gamma, label):
        shift = sum(c * b.log_offsets[k] for k, c in terms.items())
        b.le(terms, -gamma * LN2 - shift, label)

    rate_row({x1: 1, x2: 1, y1: -1, y2: -1}, req.gamma1, "rate1")
    rate_row({z1: 1, x3: 1, q1: -1, y3: -1}, req.gamma2, "rate2_leg1")
    rate_row({z2: 1, x3: 1, q2: -1, y3: -1}, req.gamma2, "rate2_leg2")

    taylor_le(b, {S: H1}, s1, x1, lin.x1_t, "taylor_x1")
    taylor_le(b, {W1: G, S: G}, se, x2, lin.x2_t, "taylor_x2")
    taylor_le(b, {W1: H1, S: H1}, s1, z1, lin.z1_t, "taylor_z1")
    taylor_le(b, {W1: H2, S: H2}, s2, z2, lin.z2_t, "taylor_z2")
    taylor_le(b, {W1: G, W2: G, S: G}, se, x3, lin.x3_t, "taylor_x3")

    gg = float(np.vdot(ch.g, ch.g).real) or 1.0
    norm = b.power_scale * gg
    b.ge({W1: G / norm, W2: G / norm, S: G / norm}, c / norm, "eh_threshold")

    exp_ge(b, y1, {W1: H1, S: H1}, s1, off["y1"], "exp_y1")
    exp_ge(b, y2, {S: G}, se, off["y2"], "exp_y2")
    exp_ge(b, q1, {W1: H1, W2: H1, S: H1}, s1, off["q1"], "exp_q1")
    exp_ge(b, q2, {W1: H2, W2: H2, S: H2}, s2, off["q2"], "exp_q2")
    exp_ge(b, y3, {W1: G, S: G}, se, off["y3"], "exp_y3")
    return b.build()


def penalty_terms(prev: CovarianceDesign):
    """Per-user affine surrogate of ``Tr(W) - lambda_max(W)`` around ``prev``.

    Returns ``[(coef_matrix, const), ...]`` such that the surrogate equals
    ``Re Tr(coef W) + const``.
    """
    out = []
    for Wn in (prev.W1, prev.W2):
        lam, v = max_eigenpair(Wn)
        vv = np.outer(v, v.conj())
        n = Wn.shape[0]
        # Tr(W) - lam - v^H (W - Wn) v
        const = -lam + float(np.real(np.vdot(v, Wn @ v)))
        out.append((np.eye(n) - vv, const))
    return out


def penalty_value(W1, W2, prev: CovarianceDesign) -> float:
    total = 0.0
    for (coef, const), W in zip(penalty_terms(prev), (W1, W2)):
        total += float(np.real(np.trace(coef @ W))) + const
    return total


def build_p5(
    ch: ChannelRealization,
    req: Requirements,
    eh: EhModel,
    lin: LinearizationPoint,
    prev: CovarianceDesign,
    alpha: float,
    power_scale: float | None = None,
    hint: ScalingHint | None = None,
) -> ConicProgram:
    """:func:`build_p3` plus ``alpha`` times the linearized rank-one penalty."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    p = build_p3(ch, req, eh, lin, power_scale, hint)
    if alpha == 0:
        return p
    n = ch.n_antennas
    obj = p.objective.copy()
    const = p.objective_const
    for name, (coef, c0) in zip(("W1", "W2"), penalty_terms(prev)):
        obj[p.variables[name]] += alpha * p.trace_row(name, coef)
        const += alpha * c0 / p.power_scale
    p.objective = obj
    p.objective_const = const
    p.validate()
    return p


def with_slack(p: ConicProgram, labels, weight: float = 1e3) -> ConicProgram:
    """Copy of ``p`` where the named rows get a penalized non-negative slack."""
    labels = list(labels)
    k = len(labels)
    n0 = p.n_vars
    A = np.hstack([p.A, np.zeros((p.n_linear, k))])
    for j, lab in enumerate(labels):
        A[p.linear_labels.index(lab), n0 + j] = -1.0
    A = np.vstack([A, np.hstack([np.zeros((k, n0)), -np.eye(k)])])
    b = np.concatenate([p.b, np.zeros(k)])
    variables = dict(p.variables)
    names = []
    for j, lab in enumerate(labels):
        nm = f"slack_{lab}"
        variables[nm] = slice(n0 + j, n0 + j + 1)
        names.append(nm)
    pad = lambda v: np.concatenate([v, np.zeros(k)])  # noqa: E731
    q = p.__class__(
        n_vars=n0 + k,
        objective=np.concatenate([p.objective, np.full(k, weight)]),
        objective_const=p.objective_const,
        A=A,
        b=b,
        linear_labels=p.linear_labels + [f"{nm}>=0" for nm in names],
        psd=list(p.psd),
        exp_cones=[ExpCone(pad(e.u), e.u0, pad(e.v), e.v0, e.label) for e in p.exp_cones],
        variables=variables,
        power_scale=p.power_scale,
        log_offsets=dict(p.log_offsets),
        slack_names=tuple(names),
        congruence=dict(p.congruence),
    )
    q.validate()
    return q


TAYLOR_ROWS = ("taylor_x1", "taylor_x2", "taylor_z1", "taylor_z2", "taylor_x3")


def dump_program(p: ConicProgram) -> str:
    """Plain-text listing of a program, stable enough for regression diffs."""
    out = io.StringIO()
    names = {}
    for nm, sl in p.variables.items():
        for j in range(sl.start, sl.stop):
            names[j] = nm if sl.stop - sl.start == 1 else f"{nm}[{j - sl.start}]"

    def fmt(vec):
        nz = np.flatnonzero(np.abs(vec) > 0)
        return " ".join(f"{vec[j]:+.12g}*{names[j]}" for j in nz) or "0"

    out.write(f"# conic program: {p.n_vars} variables, power_scale={p.power_scale:.12g} W\n")
    out.write(f"minimize {fmt(p.objective)} {p.objective_const:+.12g}\n")
    for blk in p.psd:
        out.write(f"psd {blk.name} complex_dim={blk.n} real_dim={blk.real_dim}\n")
    for nm, off in p.log_offsets.items():
        out.write(f"offset {nm} {off:.12g}\n")
    for lab, row, rhs in zip(p.linear_labels, p.A, p.b):
        out.write(f"linear {lab}: {fmt(row)} <= {rhs:.12g}\n")
    for e in p.exp_cones:
        out.write(f"expcone {e.label}: exp({fmt(e.u)} {e.u0:+.12g}) <= {fmt(e.v)} {e.v0:+.12g}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Solving


@dataclass
class ConicSolution:
    status: str  # "optimal" | "infeasible" | "numerical-failure"
    objective: float = math.nan  # Watts
    W1: np.ndarray | None = None
    W2: np.ndarray | None = None
    Sigma: np.ndarray | None = None
    aux: dict = field(default_factory=dict)  # log-Watts
    slacks: dict = field(default_factory=dict)
    infeasibility_certificate: bool = False
    max_violation: float = math.nan
    iterations: int = 0
    solver_status: str = ""
    matrices: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def design(self) -> CovarianceDesign:
        return CovarianceDesign(self.W1, self.W2, self.Sigma)


SOLVER_TOL = 1e-8
SOLVER_MAX_ITER = 200


def _clarabel(p: ConicProgram, tol: float, max_iter: int, **overrides):
    import clarabel
    import scipy.sparse as sp

    blocks, rhs, cones = [], [], []
    if p.n_linear:
        blocks.append(p.A)
        rhs.append(p.b)
        cones.append(clarabel.NonnegativeConeT(p.n_linear))
    for e in p.exp_cones:
        blocks.append(np.vstack([-e.u, np.zeros(p.n_vars), -e.v]))
        rhs.append(np.array([e.u0, 1.0, e.v0]))
        cones.append(clarabel.ExponentialConeT())
    for blk in p.psd:
        M = embedding_operator(blk.n)
        rows = np.zeros((M.shape[0], p.n_vars))
        rows[:, blk.start : blk.stop] = -M
        blocks.append(rows)
        rhs.append(np.zeros(M.shape[0]))
        cones.append(clarabel.PSDTriangleConeT(blk.real_dim))
    A = sp.csc_matrix(np.vstack(blocks))
    bvec = np.concatenate(rhs)
    P = sp.csc_matrix((p.n_vars, p.n_vars))

    settings = clarabel.DefaultSettings()
    settings.verbose = bool(os.environ.get("SECNOMA_SOLVER_VERBOSE"))
    settings.max_iter = max_iter
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    for k, v in overrides.items():
        setattr(settings, k, v)
    solver = clarabel.DefaultSolver(P, p.objective, A, bvec, cones, settings)
    sol = solver.solve()
    status = str(sol.status).split(".")[-1]
    return status, np.array(sol.x), np.array(sol.s), int(sol.iterations)


def _map_status(s: str) -> tuple[str, bool]:
    if s in ("Solved", "AlmostSolved"):
        return "optimal", False
    if s in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return "infeasible", True
    return "numerical-failure", False


BACKENDS = {"clarabel": _clarabel}

# tried in order while the backend reports a numerical failure; Ruiz
# equilibration occasionally hurts once the user-span block gets badly scaled
RETRY_SETTINGS = ({}, {"equilibrate_enable": False})


def constraint_violation(p: ConicProgram, x: np.ndarray) -> float:
    """Largest violation of the linear and exponential rows at ``x`` (row units)."""
    worst = 0.0
    if p.n_linear:
        worst = max(worst, float(np.max(p.A @ x - p.b)))
    for e in p.exp_cones:
        u = float(e.u @ x + e.u0)
        v = float(e.v @ x + e.v0)
        worst = max(worst, math.exp(min(u, 700.0)) - v)
    return worst


def solve_conic(
    p: ConicProgram,
    backend: str = "clarabel",
    tol: float = SOLVER_TOL,
    max_iter: int = SOLVER_MAX_ITER,
) -> ConicSolution:
    p.validate()
    for overrides in RETRY_SETTINGS:
        raw_status, x, s, iters = BACKENDS[backend](p, tol, max_iter, **overrides)
        status, cert = _map_status(raw_status)
        if status != "numerical-failure":
            break
    if status != "optimal":
        return ConicSolution(
            status=status,
            infeasibility_certificate=cert,
            iterations=iters,
            solver_status=raw_status,
        )

    # PSD blocks are read from the cone slack, which lies inside the cone
    offset = p.n_linear + 3 * len(p.exp_cones)
    mats = {}
    for blk in p.psd:
        m = blk.real_dim
        k = m * (m + 1) // 2
        R = smat(s[offset : offset + k], m)
        offset += k
        mats[blk.name] = psd_part(p.unscale_matrix(blk.name, psd_part(derealify(R))))

    aux = {}
    slacks = {}
    for nm, sl in p.variables.items():
        if sl.stop - sl.start != 1:
            continue
        val = float(x[sl.start])
        if nm in p.slack_names:
            slacks[nm[len("slack_"):]] = val
        else:
            aux[nm] = val + p.log_offsets.get(nm, 0.0)

    obj = p.power_scale * (float(p.objective @ x) + p.objective_const)
    return ConicSolution(
        status="optimal",
        objective=obj,
        W1=mats.get("W1"),
        W2=mats.get("W2"),
        Sigma=mats.get("Sigma"),
        aux=aux,
        slacks=slacks,
        max_violation=constraint_violation(p, x),
        iterations=iters,
        solver_status=raw_status,
        matrices=mats,
    )


def solve_with_fallback(p: ConicProgram, slack_rows=TAYLOR_ROWS, backend: str = "clarabel"):
    """Solve ``p``; on reported infeasibility retry with slack on ``slack_rows``.

    The retry counts as feasible only if every slack ends below 1e-6.
    """
    sol = solve_conic(p, backend)
    if sol.status != "infeasible":
        return sol
    rows = [r for r in slack_rows if r in p.linear_labels]
    relaxed = solve_conic(with_slack(p, rows), backend)
    if not relaxed.optimal or max(relaxed.slacks.values(), default=0.0) > 1e-6:
        return ConicSolution(status="infeasible", infeasibility_certificate=True)
    # report the true objective, without the slack penalty
    relaxed.objective -= p.power_scale * 1e3 * sum(relaxed.slacks.values())
    return relaxed

