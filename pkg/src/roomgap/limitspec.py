"""Spectrum of the homogenized two-component operator.

The limit problem lives on the strip ``(-L, 0)`` with an extra boundary field on
``x2 = 0``: ``-Lap u1 = lam u1``, ``du1/dn = alpha*r*(u2 - u1)`` and
``alpha*(u2 - u1) = lam*u2`` on the top line, Neumann at the bottom.

Its spectrum is ``[0, alpha] U [beta, inf)`` when ``alpha < (pi/(2L))^2`` and
``[0, inf)`` otherwise.  The gap edge ``beta`` is the fixed point
``beta = beta(mu) = alpha*mu/(alpha*r + mu)`` with ``mu < -alpha*r``, where
``beta(mu)`` is the lowest eigenvalue of ``-u'' = lam u`` on ``(-L, 0)`` with
``u'(-L) = 0`` and ``u'(0) = mu*u(0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from roomgap.errors import BracketFailure

MU_FAR = -1e8
ROOT_XTOL = 1e-15


@dataclass(frozen=True)
class LimitParams:
    alpha: float
    r: float
    L: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.r > 0 and self.L > 0):
            raise ValueError("alpha, r and L must be positive")

    @property
    def threshold(self) -> float:
        """``(pi/(2L))^2``: a gap opens iff alpha is below it."""
        return (math.pi / (2.0 * self.L)) ** 2


def beta_of_mu(mu: float, L: float = 1.0) -> float:
    """Lowest eigenvalue of the Neumann-Robin problem on ``(-L, 0)``."""
    mu, L = float(mu), float(L)
    if mu == 0.0:
        return 0.0
    if mu < 0:
        # lam = k^2, k in (0, pi/(2L)):  k sin(kL) + mu cos(kL) = 0  (pole-free form of -k tan kL = mu)
        def f(k):
            return k * math.sin(k * L) + mu * math.cos(k * L)

        k = brentq(f, 0.0, math.pi / (2.0 * L), xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
        return k * k

    # lam = -kappa^2 with kappa tanh(kappa L) = mu
    def g(q):
        return q * math.tanh(q * L) - mu

    hi = max(mu / math.tanh(1.0), 1.0 / L) * (1.0 + 1e-12)
    q = brentq(g, 0.0, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return -q * q


@dataclass(frozen=True)
class GapEdge:
    beta: float
    mu: float
    identity_residual: float  # |mu - alpha r beta/(alpha - beta)| / |mu|
    formula_residual: float  # |beta - alpha mu/(alpha r + mu)|


def solve_beta_star(p: LimitParams, tol: float = 1e-12) -> Optional[GapEdge]:
    """The gap edge, or ``None`` when ``alpha >= (pi/(2L))^2``."""
    a, r, L = p.alpha, p.r, p.L
    if a >= p.threshold:
        return None
    ar = a * r

    def F(mu):
        return beta_of_mu(mu, L) - a * mu / (ar + mu)

    lo, hi = MU_FAR, -ar - 1e-6 * ar
    f_lo, f_hi = F(lo), F(hi)
    if not (f_lo > 0 > f_hi):
        raise BracketFailure("fixed-point function does not change sign on the bracket",
                             bracket=(lo, hi), values=(f_lo, f_hi))
    mu = brentq(F, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=1000)
    beta = beta_of_mu(mu, L)
    identity = abs(mu - ar * beta / (a - beta)) / abs(mu)
    formula = abs(beta - a * mu / (ar + mu))
    return GapEdge(beta=beta, mu=mu, identity_residual=identity, formula_residual=formula)


@dataclass(frozen=True)
class LimitSpectrum:
    alpha: float
    beta: Optional[float]
    has_gap: bool
    intervals: Tuple[Tuple[float, float], ...]  # closed; inf as upper end

    def contains(self, lam: float, tol: float = 1e-9) -> bool:
        return any(lo - tol <= lam <= hi + tol for lo, hi in self.intervals)

    def clipped(self, lam_max: float) -> Tuple[Tuple[float, float], ...]:
        return tuple((lo, min(hi, lam_max)) for lo, hi in self.intervals if lo <= lam_max)


def limit_spectrum(p: LimitParams) -> LimitSpectrum:
    edge = solve_beta_star(p)
    if edge is None:
        return LimitSpectrum(p.alpha, None, False, ((0.0, math.inf),))
    return LimitSpectrum(p.alpha, edge.beta, True, ((0.0, p.alpha), (edge.beta, math.inf)))


# ---------------------------------------------------------------------------
# fiber bands of the limit operator on the unit cell


@dataclass(frozen=True)
class FiberBands:
    phi: float
    lower: np.ndarray  # ascending, < alpha
    upper: np.ndarray  # ascending, > alpha
    modes_used: Tuple[int, int]  # inclusive range of transverse indices m
    per_mode: dict = field(default_factory=dict)  # m -> (lower roots, upper roots)


def _dispersion(lam, theta, p: LimitParams):
    """Pole-free dispersion function whose zeros are the fiber eigenvalues for one mode.

    With ``mu(lam) = alpha*r*lam/(alpha - lam)`` the transverse condition is
    ``-k tan(kL) = mu`` (``k^2 = lam - theta^2``) or ``q tanh(qL) = mu``
    (``q^2 = theta^2 - lam``); multiplying through by ``(alpha - lam)*cos``
    (resp. ``/cosh``) removes the poles.
    """
    a, ar, L = p.alpha, p.alpha * p.r, p.L
    s = lam - theta * theta
    if s > 0:
        k = math.sqrt(s)
        return (a - lam) * (-k * math.sin(k * L)) - ar * lam * math.cos(k * L)
    q = math.sqrt(-s)
    return (a - lam) * q * math.tanh(q * L) - ar * lam


def _mode_roots(theta, p, lo, hi, step, tol):
    grid = np.arange(lo, hi, step)
    grid = np.append(grid, hi) if grid[-1] < hi else grid
    vals = np.array([_dispersion(x, theta, p) for x in grid])
    roots = []
    for i in range(len(grid)):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif i + 1 < len(grid) and vals[i] * vals[i + 1] < 0:
            roots.append(brentq(_dispersion, grid[i], grid[i + 1], args=(theta, p), xtol=tol,
                                rtol=4 * np.finfo(float).eps))
    return roots


def default_mode_range(phi: float, p: LimitParams, lam_max: float, lower_modes: int = 3) -> Tuple[int, int]:
    """Every ``m`` with ``(phi + 2 pi m)^2 <= lam_max + alpha``, widened to ``|m| <= lower_modes``.

    Upper roots need ``theta^2 < lam``, so the first set is complete for them.  Each
    mode carries one lower root (they accumulate at alpha), hence the widening.
    """
    t = math.sqrt(lam_max + p.alpha)
    lo = math.ceil((-t - phi) / (2 * math.pi))
    hi = math.floor((t - phi) / (2 * math.pi))
    return min(lo, -lower_modes), max(hi, lower_modes)


def limit_fiber_bands(p: LimitParams, phi: float, m_range: Optional[Sequence[int]] = None,
                      k_per_mode: Optional[int] = None, lam_max: Optional[float] = None,
                      tol: float = 1e-12, lower_modes: int = 3) -> FiberBands:
    """Eigenvalues in ``[0, lam_max]`` of the limit fiber operator at phase ``phi``.

    Roots below ``alpha`` form the lower family, roots above it the upper one.
    """
    if lam_max is None:
        lam_max = 2.0 * p.threshold
    if m_range is None:
        m_lo, m_hi = default_mode_range(phi, p, lam_max, lower_modes)
    else:
        m_lo, m_hi = int(m_range[0]), int(m_range[-1])
    step = min(p.alpha, 1.0) / 50.0
    a = p.alpha
    lower: List[float] = []
    upper: List[float] = []
    per_mode = {}
    for m in range(m_lo, m_hi + 1):
        theta = phi + 2.0 * math.pi * m
        lo_roots = _mode_roots(theta, p, 0.0, a, step, tol)
        if theta == 0.0 and (not lo_roots or lo_roots[0] != 0.0):
            lo_roots.insert(0, 0.0)  # constant mode
        lo_roots = [x for x in lo_roots if x < a]
        hi_roots = [x for x in _mode_roots(theta, p, a, lam_max, step, tol) if x > a] if lam_max > a else []
        if k_per_mode is not None:
            lo_roots, hi_roots = lo_roots[:k_per_mode], hi_roots[:k_per_mode]
        per_mode[m] = (tuple(lo_roots), tuple(hi_roots))
        lower += lo_roots
        upper += hi_roots
    return FiberBands(phi=float(phi), lower=np.sort(np.array(lower)), upper=np.sort(np.array(upper)),
                      modes_used=(m_lo, m_hi), per_mode=per_mode)
