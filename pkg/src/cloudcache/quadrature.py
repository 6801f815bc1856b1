"""Error-controlled numerical integration and root finding.

Thin wrappers around adaptive Gauss-Kronrod integration (QUADPACK via
scipy) with the conventions used throughout the package: explicit error
estimates, caller-supplied breakpoints for integrands with kinks, and a
substitution-based treatment of semi-infinite ranges.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Raised when an integral or root cannot be resolved to tolerance."""


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and limits for adaptive integration.

    ``tail_transform`` selects how semi-infinite ranges are mapped to a
    finite interval; only the rational map x = a + t/(1-t) is implemented.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    max_subdivisions: int = 200
    tail_transform: str = "rational"

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.tail_transform != "rational":
            raise ValueError(f"unknown tail transform {self.tail_transform!r}")


DEFAULT_SPEC = QuadSpec()


def integrate_finite(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadSpec = DEFAULT_SPEC,
    breakpoints: Sequence[float] | None = None,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b] adaptively.

    Returns ``(value, error_estimate)``.  Known kink locations must be
    passed via ``breakpoints``; interior discontinuities are not detected
    automatically.  Raises :class:`QuadratureError` when the subdivision
    budget is exhausted without meeting ``max(atol, rtol * |value|)``.
    """
    if not a <= b:
        raise ValueError(f"invalid interval [{a}, {b}]")
    if a == b:
        return 0.0, 0.0
    points = None
    if breakpoints:
        points = sorted(p for p in breakpoints if a < p < b)
        if not points:
            points = None
    with np.errstate(over="ignore", invalid="ignore"):
        value, err = integrate.quad(
            f,
            a,
            b,
            epsabs=spec.atol,
            epsrel=spec.rtol,
            limit=spec.max_subdivisions,
            points=points,
        )
    if err > max(spec.atol, spec.rtol * abs(value)) * 50:
        raise QuadratureError(
            f"finite integral did not converge: value={value!r}, "
            f"error estimate={err!r}"
        )
    return value, err


def integrate_semi_infinite(
    f: Callable[[float], float],
    a: float,
    spec: QuadSpec = DEFAULT_SPEC,
    tail_bound: Callable[[float], float] | None = None,
    tail_probe: float | None = None,
) -> tuple[float, float]:
    """Integrate ``f`` over [a, inf) via the substitution x = a + t/(1-t).

    ``tail_bound``, if supplied, must bound ``|integral of f from x to
    inf|``; it is evaluated at ``tail_probe`` (default ``a + 1e8``) and
    folded into the returned error estimate as a cross-check on the
    transform.  Returns ``(value, error_estimate)``.
    """

    def g(t: float) -> float:
        one_m = 1.0 - t
        x = a + t / one_m
        return f(x) / (one_m * one_m)

    with np.errstate(over="ignore", invalid="ignore"):
        value, err = integrate.quad(
            g,
            0.0,
            1.0,
            epsabs=spec.atol,
            epsrel=spec.rtol,
            limit=spec.max_subdivisions,
        )
    if tail_bound is not None:
        probe = a + 1e8 if tail_probe is None else tail_probe
        err += abs(tail_bound(probe))
    if err > max(spec.atol, spec.rtol * abs(value)) * 50:
        raise QuadratureError(
            f"semi-infinite integral did not converge: value={value!r}, "
            f"error estimate={err!r}"
        )
    return value, err


def bisect(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of a monotone function by bisection.

    Requires ``g(lo) * g(hi) <= 0``.  Stops once ``|g(mid)| <= tol`` or the
    bracket has shrunk to machine scale.
    """
    if not lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0:
        raise ValueError(
            f"bad bracket: g({lo}) = {g_lo} and g({hi}) = {g_hi} have the same sign"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) <= tol or (hi - lo) <= 4.0 * np.finfo(float).eps * max(
            1.0, abs(mid)
        ):
            return mid
        if (g_mid > 0) == (g_hi > 0):
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_panel(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped onto [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_legendre_sqrt_panel(
    a: float, b: float, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for integrands with square-root endpoint behavior.

    Applies y = a + (b-a) sin^2(theta), which removes sqrt(y-a) and
    sqrt(b-y) factors; the returned weights absorb the Jacobian so plain
    weighted sums approximate the original integral.
    """
    theta, w = gauss_legendre_panel(0.0, 0.5 * np.pi, n)
    s, c = np.sin(theta), np.cos(theta)
    nodes = a + (b - a) * s * s
    weights = w * (b - a) * 2.0 * s * c
    return nodes, weights
