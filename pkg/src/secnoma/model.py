"""Physical model of the two-user MISO NOMA downlink with an energy-harvesting
eavesdropper: channels, secrecy rates and the sigmoid harvesting curve."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UnattainableEHError
from .hermitian import HERMITIAN_TOL, PSD_TOL, hermitian_deviation

LN2 = math.log(2.0)


def _vec(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise DimensionError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class ChannelRealization:
    """Channel vectors to user 1, user 2 and the EHR plus noise powers (W)."""

    h1: np.ndarray
    h2: np.ndarray
    g: np.ndarray
    sigma1_sq: float
    sigma2_sq: float
    sigma_e_sq: float

    def __post_init__(self):
        h1, h2, g = _vec(self.h1, "h1"), _vec(self.h2, "h2"), _vec(self.g, "g")
        if not (len(h1) == len(h2) == len(g)) or len(h1) < 1:
            raise DimensionError(
                f"channel lengths differ or are empty: {len(h1)}, {len(h2)}, {len(g)}"
            )
        for name in ("sigma1_sq", "sigma2_sq", "sigma_e_sq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if np.linalg.norm(h1) < np.linalg.norm(h2):
            raise ValueError("user ordering requires norm(h1) >= norm(h2)")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "g", g)

    @property
    def n_antennas(self) -> int:
        return len(self.h1)

    @property
    def H1(self) -> np.ndarray:
        return np.outer(self.h1, self.h1.conj())

    @property
    def H2(self) -> np.ndarray:
        return np.outer(self.h2, self.h2.conj())

    @property
    def G(self) -> np.ndarray:
        return np.outer(self.g, self.g.conj())

    def user(self, i: int):
        """``(h_i, sigma_i^2)`` for user ``i`` in {1, 2}."""
        return (self.h1, self.sigma1_sq) if i == 1 else (self.h2, self.sigma2_sq)

    def digest(self) -> str:
        import hashlib

        m = hashlib.sha256()
        for v in (self.h1, self.h2, self.g):
            m.update(np.ascontiguousarray(v).tobytes())
        m.update(np.array([self.sigma1_sq, self.sigma2_sq, self.sigma_e_sq]).tobytes())
        return m.hexdigest()[:16]

    def to_dict(self) -> dict:
        def cplx(v):
            return [[float(z.real), float(z.imag)] for z in v]

        return {
            "h1": cplx(self.h1),
            "h2": cplx(self.h2),
            "g": cplx(self.g),
            "sigma1_sq": self.sigma1_sq,
            "sigma2_sq": self.sigma2_sq,
            "sigma_e_sq": self.sigma_e_sq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelRealization":
        def cplx(v):
            return np.array([complex(re, im) for re, im in v])

        return cls(
            h1=cplx(d["h1"]),
            h2=cplx(d["h2"]),
            g=cplx(d["g"]),
            sigma1_sq=float(d["sigma1_sq"]),
            sigma2_sq=float(d["sigma2_sq"]),
            sigma_e_sq=float(d["sigma_e_sq"]),
        )


@dataclass(frozen=True)
class EhModel:
    """Sigmoid harvesting curve: saturation ``p_max`` (W), steepness ``a`` (1/W),
    turn-on point ``b`` (W)."""

    p_max: float = 0.024
    a: float = 1500.0
    b: float = 0.0022

    def __post_init__(self):
        if not (self.p_max > 0 and self.a > 0 and self.b > 0):
            raise ValueError("EH parameters p_max, a, b must all be positive")

    @property
    def psi_e(self) -> float:
        # 1/(1+exp(ab)) written to avoid overflow for large a*b
        return math.exp(-self.a * self.b) / (1.0 + math.exp(-self.a * self.b))


@dataclass(frozen=True)
class Requirements:
    gamma1: float = 3.0
    gamma2: float = 1.5
    upsilon_e: float = 1e-3

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0 or self.upsilon_e < 0:
            raise ValueError("requirements must be non-negative")


def _check_matrix(M, n: int, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.shape != (n, n):
        raise DimensionError(f"{name} has shape {M.shape}, expected {(n, n)}")
    return M


@dataclass(frozen=True)
class CovarianceDesign:
    """Transmit covariances ``W1``, ``W2`` and AN covariance ``Sigma`` (W)."""

    W1: np.ndarray
    W2: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.Sigma).shape[0]
        for name in ("W1", "W2", "Sigma"):
            object.__setattr__(self, name, _check_matrix(getattr(self, name), n, name))

    @property
    def n_antennas(self) -> int:
        return self.Sigma.shape[0]

    @property
    def total_power(self) -> float:
        return float(np.trace(self.W1).real + np.trace(self.W2).real + np.trace(self.Sigma).real)

    @classmethod
    def zeros(cls, n: int) -> "CovarianceDesign":
        z = np.zeros((n, n), dtype=complex)
        return cls(z, z.copy(), z.copy())

    def as_covariance(self) -> "CovarianceDesign":
        return self

    def to_dict(self) -> dict:
        return {k: _cmat(getattr(self, k)) for k in ("W1", "W2", "Sigma")}


@dataclass(frozen=True)
class VectorDesign:
    """Beamformers ``w1``, ``w2`` (sqrt-W amplitudes) and AN covariance ``Sigma``."""

    w1: np.ndarray
    w2: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        w1, w2 = _vec(self.w1, "w1"), _vec(self.w2, "w2")
        n = len(w1)
        if len(w2) != n:
            raise DimensionError("beamformers have different lengths")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "Sigma", _check_matrix(self.Sigma, n, "Sigma"))

    @property
    def n_antennas(self) -> int:
        return len(self.w1)

    @property
    def total_power(self) -> float:
        return float(
            np.vdot(self.w1, self.w1).real
            + np.vdot(self.w2, self.w2).real
            + np.trace(self.Sigma).real
        )

    def as_covariance(self) -> CovarianceDesign:
        return CovarianceDesign(
            np.outer(self.w1, self.w1.conj()), np.outer(self.w2, self.w2.conj()), self.Sigma
        )

    def to_dict(self) -> dict:
        return {
            "w1": [[float(z.real), float(z.imag)] for z in self.w1],
            "w2": [[float(z.real), float(z.imag)] for z in self.w2],
            "Sigma": _cmat(self.Sigma),
        }


def _cmat(M) -> dict:
    M = np.asarray(M)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _compatible(design, ch: ChannelRealization) -> CovarianceDesign:
    cov = design.as_covariance()
    if cov.n_antennas != ch.n_antennas:
        raise DimensionError(
            f"design has {cov.n_antennas} antennas, channel has {ch.n_antennas}"
        )
    return cov


def _q(h: np.ndarray, M: np.ndarray) -> float:
    """Quadratic form ``h^H M h`` (real part)."""
    return float(np.real(np.vdot(h, M @ h)))


@dataclass(frozen=True)
class LinkPowers:
    """Received powers (W) entering every rate expression."""

    # user i: signal of s1, signal of s2, AN
    u1_s1: float
    u1_s2: float
    u1_an: float
    u2_s1: float
    u2_s2: float
    u2_an: float
    # EHR
    e_s1: float
    e_s2: float
    e_an: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.__dataclass_fields__])


def link_powers(design, ch: ChannelRealization) -> LinkPowers:
    d = _compatible(design, ch)
    return LinkPowers(
        _q(ch.h1, d.W1), _q(ch.h1, d.W2), _q(ch.h1, d.Sigma),
        _q(ch.h2, d.W1), _q(ch.h2, d.W2), _q(ch.h2, d.Sigma),
        _q(ch.g, d.W1), _q(ch.g, d.W2), _q(ch.g, d.Sigma),
    )  # fmt: skip


def rates_from_links(links, ch: ChannelRealization):
    """Vectorized ``(R1, R2)`` from stacked link powers.

    ``links`` has trailing axis of length 9 ordered as the fields of
    :class:`LinkPowers`; any leading shape is broadcast.
    """
    L = np.asarray(links, dtype=float)
    u1_s1, u1_s2, u1_an, u2_s1, u2_s2, u2_an, e_s1, e_s2, e_an = np.moveaxis(L, -1, 0)
    s1, s2, se = ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq
    r1 = np.log2(1.0 + u1_s1 / (u1_an + s1)) - np.log2(1.0 + e_s1 / (e_an + se))
    r = np.minimum(
        np.log2(1.0 + u2_s2 / (u2_s1 + u2_an + s2)),
        np.log2(1.0 + u1_s2 / (u1_s1 + u1_an + s1)),
    )
    r2 = r - np.log2(1.0 + e_s2 / (e_s1 + e_an + se))
    return r1, r2


def secrecy_rates(design, ch: ChannelRealization) -> tuple[float, float]:
    """Secrecy rates ``(R1, R2)`` in bits/s/Hz, not clamped at zero.

    User 1 decodes s2 first (SIC) and then s1. The EHR is assumed to have
    removed s2 before attacking s1, so W2 does not interfere with its s1
    decoding.
    """
    lp = link_powers(design, ch)
    s1, s2, se = ch.sigma1_sq, ch.sigma2_sq, ch.sigma_e_sq
    sinr1 = lp.u1_s1 / (lp.u1_an + s1)
    sinr_e1 = lp.e_s1 / (lp.e_an + se)
    r1 = math.log2(1.0 + sinr1) - math.log2(1.0 + sinr_e1)

    sinr2_at2 = lp.u2_s2 / (lp.u2_s1 + lp.u2_an + s2)
    sinr2_at1 = lp.u1_s2 / (lp.u1_s1 + lp.u1_an + s1)
    sinr_e2 = lp.e_s2 / (lp.e_s1 + lp.e_an + se)
    r = min(math.log2(1.0 + sinr2_at2), math.log2(1.0 + sinr2_at1))
    r2 = r - math.log2(1.0 + sinr_e2)
    return r1, r2


def user2_secrecy_legs(design, ch: ChannelRealization) -> tuple[float, float]:
    """Secrecy rate of s2 computed with user 1's and user 2's decoding rate."""
    lp = link_powers(design, ch)
    sinr_e2 = lp.e_s2 / (lp.e_s1 + lp.e_an + ch.sigma_e_sq)
    at1 = lp.u1_s2 / (lp.u1_s1 + lp.u1_an + ch.sigma1_sq)
    at2 = lp.u2_s2 / (lp.u2_s1 + lp.u2_an + ch.sigma2_sq)
    le = math.log2(1.0 + sinr_e2)
    return math.log2(1.0 + at1) - le, math.log2(1.0 + at2) - le


def c4_fraction(design, ch: ChannelRealization) -> float:
    """Left-hand side of the relaxed user-1 rate constraint, written in traces."""
    d = _compatible(design, ch)
    s1, se = ch.sigma1_sq, ch.sigma_e_sq
    num = (_q(ch.h1, d.Sigma) + s1) * (_q(ch.g, d.W1 + d.Sigma) + se)
    den = (_q(ch.h1, d.W1 + d.Sigma) + s1) * (_q(ch.g, d.Sigma) + se)
    return num / den


def c5_fractions(design, ch: ChannelRealization) -> tuple[float, float]:
    """Left-hand sides of the relaxed user-2 rate constraint for legs i = 1, 2."""
    d = _compatible(design, ch)
    se = ch.sigma_e_sq
    total = d.W1 + d.W2 + d.Sigma
    w1s = d.W1 + d.Sigma
    out = []
    for i in (1, 2):
        h, s = ch.user(i)
        num = (_q(h, w1s) + s) * (_q(ch.g, total) + se)
        den = (_q(h, total) + s) * (_q(ch.g, w1s) + se)
        out.append(num / den)
    return out[0], out[1]


def received_eh_power(design, ch: ChannelRealization) -> float:
    """RF power reaching the EHR, ``g^H (W1 + W2 + Sigma) g``."""
    d = _compatible(design, ch)
    return _q(ch.g, d.W1 + d.W2 + d.Sigma)


def harvest_curve(gamma_e, eh: EhModel):
    """Harvested power for RF input ``gamma_e`` (scalar or array), in W."""
    gamma_e = np.asarray(gamma_e, dtype=float)
    logistic = eh.p_max / (1.0 + np.exp(-eh.a * (gamma_e - eh.b)))
    psi = eh.psi_e
    out = (logistic - eh.p_max * psi) / (1.0 - psi)
    return float(out) if out.ndim == 0 else out


def harvested_power(design, ch: ChannelRealization, eh: EhModel) -> float:
    return harvest_curve(received_eh_power(design, ch), eh)


def eh_input_threshold(eh: EhModel, upsilon_e: float) -> float:
    """RF input power ``c`` at which the harvester delivers exactly ``upsilon_e``.

    Raises :class:`UnattainableEHError` when ``upsilon_e >= p_max``. Targets at
    or below zero give ``c <= 0`` (``-inf`` when the target lies below the
    curve's range), meaning the harvesting constraint is inactive.
    """
    if upsilon_e >= eh.p_max:
        raise UnattainableEHError(
            f"harvesting target {upsilon_e:g} W is not below saturation {eh.p_max:g} W"
        )
    psi = eh.psi_e
    denom = upsilon_e * (1.0 - psi) + eh.p_max * psi
    if denom <= 0:
        return -math.inf
    return eh.b - math.log(eh.p_max / denom - 1.0) / eh.a


@dataclass
class FeasibilityReport:
    rate1_slack: float
    rate2_slack: float
    eh_slack: float
    min_eigenvalues: dict = field(default_factory=dict)
    hermitian_deviation: float = 0.0
    feasible: bool = False
    tol: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "rate1_slack": self.rate1_slack,
            "rate2_slack": self.rate2_slack,
            "eh_slack": self.eh_slack,
            "min_eigenvalues": dict(self.min_eigenvalues),
            "hermitian_deviation": self.hermitian_deviation,
            "feasible": self.feasible,
            "tol": self.tol,
        }


def verify_design(
    design, ch: ChannelRealization, req: Requirements, eh: EhModel, tol: float = 1e-6
) -> FeasibilityReport:
    """Constraint slacks of a design; ``feasible`` when every slack is >= -tol.

    The slacks are in their natural units: bits/s/Hz for the rates, Watts for
    harvesting, Watts for the PSD checks.
    """
    cov = _compatible(design, ch)
    r1, r2 = secrecy_rates(cov, ch)
    eh_slack = harvested_power(cov, ch, eh) - req.upsilon_e
    mats = {"W1": cov.W1, "W2": cov.W2, "Sigma": cov.Sigma}
    herm = max(hermitian_deviation(M) for M in mats.values())
    eigs = {
        k: float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0]) for k, M in mats.items()
    }
    slacks = [r1 - req.gamma1, r2 - req.gamma2, eh_slack]
    ok = (
        all(s >= -tol for s in slacks)
        and herm <= HERMITIAN_TOL
        and all(e >= -PSD_TOL for e in eigs.values())
    )
    return FeasibilityReport(
        rate1_slack=r1 - req.gamma1,
        rate2_slack=r2 - req.gamma2,
        eh_slack=eh_slack,
        min_eigenvalues=eigs,
        hermitian_deviation=herm,
        feasible=bool(ok),
        tol=tol,
    )
