"""Analytic spectral-efficiency models and the solvers built on them.

All spectral efficiencies are in nats per symbol; dB conversions happen at
the CLI boundary only.  The four models:

- :func:`shannon_se`                   log(1 + snr), the linear-channel bound
- :func:`dispersive_se`                log snr - (gt^2/3) g(bt)
- :func:`nondispersive_se_exact`       log snr - penalty integral (bt = 0,
                                       any gt)
- :func:`nondispersive_se_expansion`   log snr - gt^2/3 (+ optional quartic)

plus :func:`crossover_snr` (where the dispersive curve meets the exact
nondispersive one under the link's gt(snr) mapping) and
:func:`applicability_bound` (where the estimated next-order correction stops
being small).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.integrate import quad

from .params import PhysicalChannel, gamma_tilde_of_snr
from .specfun import GEval, g_eval


class QuadratureError(RuntimeError):
    """Penalty integral did not reach the requested absolute accuracy."""


class NoBracketError(RuntimeError):
    """Curves do not cross (or coincide) inside the search window."""


@dataclass(frozen=True)
class SEPoint:
    """One (snr, model) spectral-efficiency sample."""

    snr: float
    gamma_tilde: float
    beta_tilde: float
    se_nats: float
    model: str  # shannon | dispersive_perturbative | nondispersive_exact | nondispersive_expansion


@dataclass(frozen=True)
class SnrPoint:
    """An snr expressed both ways."""

    linear: float
    db: float

    @classmethod
    def from_linear(cls, snr):
        snr = float(snr)
        return cls(linear=snr, db=10.0 * math.log10(snr) if math.isfinite(snr) else math.inf)


NO_BOUND = SnrPoint(linear=math.inf, db=math.inf)


@lru_cache(maxsize=256)
def _g_cached(beta_tilde: float) -> GEval:
    return g_eval(beta_tilde)


def shannon_se(snr) -> float:
    """log(1 + snr) for the linear AWGN channel."""
    if snr < 0.0:
        raise ValueError(f"snr must be >= 0, got {snr}")
    return math.log1p(snr)


def dispersive_se(snr, gamma_tilde, beta_tilde, g_value=None) -> float:
    """Leading-order dispersive result log snr - (gt^2/3) g(bt).

    ``g_value`` short-circuits the g evaluation (used by sweeps); otherwise
    g comes from the auto-dispatching evaluator.
    """
    if not (snr > 0.0):
        raise ValueError(f"snr must be > 0, got {snr}")
    if gamma_tilde < 0.0:
        raise ValueError(f"gamma_tilde must be >= 0, got {gamma_tilde}")
    g = _g_cached(float(beta_tilde)).value if g_value is None else g_value
    return math.log(snr) - gamma_tilde**2 / 3.0 * g


_GLAG64 = laggauss(64)
_GLAG128 = laggauss(128)


def nondispersive_penalty(gamma_tilde, abs_tol=1e-9) -> float:
    """Penalty integral (1/2) int_0^inf e^-t log(1 + t^2 gt^2 / 3) dt.

    64-point Gauss-Laguerre, verified against the 128-point rule; where the
    two disagree beyond ``abs_tol/2`` (large gt makes the integrand's log
    ramp hard for a fixed rule) an adaptive quadrature takes over.  Raises
    :class:`QuadratureError` if the adaptive error estimate still exceeds
    ``abs_tol``.
    """
    if gamma_tilde < 0.0:
        raise ValueError(f"gamma_tilde must be >= 0, got {gamma_tilde}")
    if gamma_tilde == 0.0:
        return 0.0
    a = gamma_tilde * gamma_tilde / 3.0
    x64, w64 = _GLAG64
    x128, w128 = _GLAG128
    v64 = 0.5 * float(np.sum(w64 * np.log1p(a * x64 * x64)))
    v128 = 0.5 * float(np.sum(w128 * np.log1p(a * x128 * x128)))
    if abs(v64 - v128) <= 0.5 * abs_tol:
        return v64
    val, est = quad(lambda t: math.exp(-t) * math.log1p(a * t * t), 0.0, np.inf,
                    epsabs=0.1 * abs_tol, epsrel=1e-12, limit=400)
    if est > abs_tol:
        raise QuadratureError(
            f"penalty quadrature reached abs error {est:.2e} > {abs_tol:.0e} "
            f"at gamma_tilde={gamma_tilde:g}")
    return 0.5 * val


def nondispersive_se_exact(snr, gamma_tilde, abs_tol=1e-9) -> float:
    """Exact per-sample result for the zero-dispersion channel."""
    if not (snr > 0.0):
        raise ValueError(f"snr must be > 0, got {snr}")
    return math.log(snr) - nondispersive_penalty(gamma_tilde, abs_tol=abs_tol)


def nondispersive_se_expansion(snr, gamma_tilde, include_quartic=False) -> float:
    """Small-gt expansion log snr - gt^2/3 [+ 2 gt^4/3].

    The quartic term is off by default (matching the quadratic truncation
    plotted against the exact curve); it is exposed for applicability
    analysis of the next order.
    """
    if not (snr > 0.0):
        raise ValueError(f"snr must be > 0, got {snr}")
    se = math.log(snr) - gamma_tilde**2 / 3.0
    if include_quartic:
        se += 2.0 * gamma_tilde**4 / 3.0
    return se


def evaluate_se(model, snr, gamma_tilde, beta_tilde=0.0, g_value=None) -> SEPoint:
    """Evaluate one named model at one operating point."""
    if model == "shannon":
        se = shannon_se(snr)
    elif model == "dispersive_perturbative":
        se = dispersive_se(snr, gamma_tilde, beta_tilde, g_value=g_value)
    elif model == "nondispersive_exact":
        se = nondispersive_se_exact(snr, gamma_tilde)
    elif model == "nondispersive_expansion":
        se = nondispersive_se_expansion(snr, gamma_tilde)
    else:
        raise ValueError(f"unknown model {model!r}")
    return SEPoint(snr=float(snr), gamma_tilde=float(gamma_tilde),
                   beta_tilde=float(beta_tilde), se_nats=se, model=model)


def crossover_snr(phys: PhysicalChannel, window_db=(0.0, 60.0),
                  tol_db=0.01) -> SnrPoint:
    """snr where the dispersive curve meets the exact nondispersive one.

    Both curves share the link's gt(snr) mapping.  Below the crossover the
    dispersive result is the larger one (its penalty carries the g < 1
    suppression); above, its quadratic growth takes over.  Bisection to
    ``tol_db`` on a sign change of the penalty difference scanned over
    ``window_db``; raises :class:`NoBracketError` when no crossing exists
    (e.g. bt = 0, where the curves agree to O(gt^4)).
    """
    if not (phys.gamma > 0.0):
        raise ValueError("crossover requires gamma > 0")
    bt = phys.beta * phys.length * phys.bandwidth**2
    g = _g_cached(float(bt)).value

    def diff(snr_db):
        gt = gamma_tilde_of_snr(phys, 10.0 ** (snr_db / 10.0))
        return nondispersive_penalty(gt) - gt * gt / 3.0 * g

    lo, hi = window_db
    grid = np.linspace(lo, hi, max(61, int(hi - lo) + 1))
    vals = [diff(d) for d in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            return SnrPoint.from_linear(10.0 ** (grid[i] / 10.0))
        if vals[i] * vals[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        raise NoBracketError(
            f"no dispersive/nondispersive crossing in [{lo:g}, {hi:g}] dB")
    a, b = bracket
    fa = diff(a)
    while b - a > tol_db:
        mid = 0.5 * (a + b)
        fm = diff(mid)
        if fa * fm <= 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return SnrPoint.from_linear(10.0 ** (0.5 * (a + b) / 10.0))


def applicability_bound(phys: PhysicalChannel, ratio_max=0.5) -> SnrPoint:
    """Largest snr where the estimated next correction stays small.

    The next-order term is estimated as (g gt^2)^2 against the current
    correction g gt^2 / 3, so the bound solves ``g gt^2 = ratio_max / 3``
    under the link's gt(snr) mapping.  ``ratio_max`` defaults to 0.5 ("next
    correction at most half the current one"), which lands the standard
    1000 km link near 30 dB.  A linear link (gamma = 0) returns the
    no-bound sentinel (infinite snr).
    """
    if not (0.0 < ratio_max <= 1.0):
        raise ValueError(f"ratio_max must be in (0, 1], got {ratio_max}")
    if phys.gamma == 0.0:
        return NO_BOUND
    bt = phys.beta * phys.length * phys.bandwidth**2
    g = _g_cached(float(bt)).value
    c = gamma_tilde_of_snr(phys, 1.0)  # gt per unit snr
    snr = math.sqrt(ratio_max / (3.0 * g)) / c
    return SnrPoint.from_linear(snr)
