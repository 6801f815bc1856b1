"""Laplace transform of out-of-cloud interference and derived statistics.

The aggregate interference at the user is a sum over all other clouds of
the powers received from each cloud's active nodes (at most M per cloud,
unit-mean exponential fades, pathloss exponent ``alpha_o``, nodes excluded
from the guard disk).  Its Laplace transform has the product-over-clouds
form

    L(s) = exp( -2 pi lam_p * integral_x { 1 - Psi(s, x) } x dx ),

where ``Psi(s, x)`` mixes powers of the single-node fade-and-distance
average over the truncated Poisson law of the active count of a cloud at
center distance x.  The distance law of an eligible node is the disk
distance density conditioned on lying outside the guard disk.

The evaluator precomputes a fixed Gauss-Legendre tableau (inner distance
nodes per outer center-distance node, plus a rational map for the
semi-infinite outer tail), so a single evaluation is a vectorized pass
over cached arrays and accepts complex arguments.  Derivatives of any
order are obtained analytically from derivatives of the exponent via
Bell polynomials, never by finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy import stats

from .geometry import (
    CloudGeometry,
    guard_excluded_area,
    guard_excluded_area_arr,
    lens_area_slope_arr,
)
from .quadrature import (
    QuadratureError,
    gauss_legendre_panel,
    gauss_legendre_sqrt_panel,
)


class InterferenceError(RuntimeError):
    """Evaluation of the interference transform failed diagnostics."""


@dataclass(frozen=True)
class RadioParams:
    """Linear-scale radio parameters.

    ``lam`` is the node intensity inside a cloud, ``lam_p`` the cloud
    center intensity; ``alpha_i < alpha_o`` (other clouds are farther on
    average) and ``alpha_o > 2`` so the interference field is summable.
    """

    P: float
    alpha_i: float
    alpha_o: float
    sigma2: float
    beta: float
    lam: float
    lam_p: float
    M: int

    def __post_init__(self):
        if self.P <= 0 or self.sigma2 <= 0 or self.beta <= 0:
            raise ValueError("P, sigma2 and beta must be positive (linear scale)")
        if self.lam <= 0 or self.lam_p < 0:
            raise ValueError("intensities must be positive (lam_p may be zero)")
        if not self.alpha_i < self.alpha_o:
            raise ValueError(
                f"alpha_i={self.alpha_i} must be smaller than alpha_o={self.alpha_o}"
            )
        if not self.alpha_o > 2:
            raise ValueError("alpha_o must exceed 2 for a summable interference field")
        if self.M < 1:
            raise ValueError("antenna count must be >= 1")


@dataclass(frozen=True)
class GammaSurrogate:
    """Two-moment Gamma fit to the interference distribution."""

    tau: float
    zeta: float

    def __post_init__(self):
        if self.tau <= 0 or self.zeta <= 0:
            raise ValueError("Gamma surrogate requires positive shape and scale")

    @property
    def mean(self) -> float:
        return self.tau * self.zeta

    @property
    def second_moment(self) -> float:
        return self.tau * (self.tau + 1.0) * self.zeta**2

    def pdf(self, x):
        return stats.gamma.pdf(x, a=self.tau, scale=self.zeta)

    def cdf(self, x):
        return stats.gamma.cdf(x, a=self.tau, scale=self.zeta)


def _eligible_distance_rule(
    x: float, D: float, d_g: float, n_uniform: int, n_lens: int
) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule for the distance density of an eligible cloud node.

    Returns nodes and weights such that sum(w * g(y)) approximates
    E[g(Y)] for Y the distance of a node uniform on the cloud disk at
    center distance ``x``, conditioned on Y >= d_g.  Weights are
    renormalized to sum to exactly one, which makes the transform exactly
    one at s = 0.
    """
    nodes = []
    weights = []
    uniform_hi = max(D - x, d_g)
    if uniform_hi > d_g:
        y, w = gauss_legendre_panel(d_g, uniform_hi, n_uniform)
        nodes.append(y)
        weights.append(w * 2.0 * np.pi * y)
    lens_lo = max(abs(D - x), d_g)
    lens_hi = D + x
    if lens_hi > lens_lo and x > 0:
        y, w = gauss_legendre_sqrt_panel(lens_lo, lens_hi, n_lens)
        nodes.append(y)
        weights.append(w * lens_area_slope_arr(x, y, D))
    if not nodes:
        return np.empty(0), np.empty(0)
    y = np.concatenate(nodes)
    w = np.concatenate(weights)
    total = w.sum()
    if total <= 0:
        return np.empty(0), np.empty(0)
    return y, w / total


def _active_count_weights(mean: float, M: int) -> np.ndarray:
    """Probabilities of a = min(M, Poisson(mean)) for a = 0..M."""
    w = np.empty(M + 1)
    w[:M] = stats.poisson.pmf(np.arange(M), mean)
    w[M] = max(0.0, 1.0 - w[:M].sum())
    return w


class _Tableau:
    """Cached discretization of the double integral in the exponent."""

    __slots__ = (
        "x_out",
        "w_out",
        "count_w",
        "y_flat",
        "c_flat",
        "gain_flat",
        "offsets",
    )

    def __init__(self, params: RadioParams, geom: CloudGeometry, level: int):
        D, d_g = geom.D, geom.d_g
        scale = 2**level
        n_uniform = 24 * scale
        n_lens = 32 * scale
        n_outer = 16 * scale
        n_tail = 12 * scale

        x_lo = max(0.0, d_g - D)
        edges = sorted({x_lo, abs(D - d_g), D, D + d_g})
        edges = [e for e in edges if e >= x_lo]
        xs = []
        ws = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            mid = 0.5 * (a + b)
            for lo, hi in ((a, mid), (mid, b)):
                x, w = gauss_legendre_panel(lo, hi, n_outer)
                xs.append(x)
                ws.append(w)
        # Semi-infinite tail x = x_t * (1 - t)^(-kappa); kappa chosen so the
        # transformed integrand vanishes at least linearly at t = 1.
        x_t = edges[-1]
        kappa = max(1.0, 2.0 / (params.alpha_o - 2.0))
        t_edges = [0.0] + [1.0 - 0.5**j for j in range(1, 13)] + [1.0]
        for a, b in zip(t_edges[:-1], t_edges[1:]):
            t, wt = gauss_legendre_panel(a, b, n_tail)
            one_m = 1.0 - t
            xs.append(x_t * one_m**-kappa)
            ws.append(wt * x_t * kappa * one_m ** (-kappa - 1.0))
        x_out = np.concatenate(xs)
        w_out = np.concatenate(ws)

        lam_p = params.lam_p
        self.x_out = x_out
        self.w_out = 2.0 * np.pi * lam_p * w_out * x_out

        M = params.M
        means = params.lam * guard_excluded_area_arr(x_out, D, d_g)
        self.count_w = np.empty((x_out.size, M + 1))
        self.count_w[:, :M] = stats.poisson.pmf(
            np.arange(M)[None, :], means[:, None]
        )
        self.count_w[:, M] = np.maximum(0.0, 1.0 - self.count_w[:, :M].sum(axis=1))
        y_parts = []
        c_parts = []
        offsets = np.zeros(x_out.size + 1, dtype=np.int64)
        for j, x in enumerate(x_out):
            y, c = _eligible_distance_rule(x, D, d_g, n_uniform, n_lens)
            y_parts.append(y)
            c_parts.append(c)
            offsets[j + 1] = offsets[j] + y.size
        self.offsets = offsets
        self.y_flat = (
            np.concatenate(y_parts) if y_parts else np.empty(0)
        )
        self.c_flat = (
            np.concatenate(c_parts) if c_parts else np.empty(0)
        )
        # P * y^(-alpha_o): the per-node interference coefficient.
        self.gain_flat = params.P * self.y_flat**-params.alpha_o

    def _segment_sum(self, frac):
        starts = self.offsets[:-1]
        if self.y_flat.size == 0:
            return np.zeros(self.x_out.size, dtype=frac.dtype)
        out = np.add.reduceat(frac, np.minimum(starts, self.y_flat.size - 1))
        out[self.offsets[1:] == starts] = 0.0
        return out

    def node_averages(self, s, orders: int = 0) -> np.ndarray:
        """Per-outer-node averages of (g^r / (1 + s g)^(r+1)) for r <= orders.

        Row r feeds the r-th derivative of the single-node average
        u(s) = E[1 / (1 + s g)] through u^(r) = (-1)^r r! * row_r.
        """
        g = self.gain_flat
        denom = 1.0 + s * g
        rows = np.empty(
            (orders + 1, self.x_out.size),
            dtype=np.result_type(denom.dtype, float),
        )
        frac = self.c_flat / denom
        rows[0] = self._segment_sum(frac)
        for r in range(1, orders + 1):
            frac = frac * (g / denom)
            rows[r] = self._segment_sum(frac)
        rows[0, self.offsets[1:] == self.offsets[:-1]] = 1.0
        return rows

    def one_minus_mixture(self, s) -> np.ndarray:
        """1 - Psi(s, x) per outer node, free of cancellation.

        With u the node average and v = 1 - u accumulated directly as
        E[s g / (1 + s g)], the mixture complement is v * sum_a w_a *
        (1 + u + ... + u^(a-1)); every factor is formed from same-sign
        terms, so far-tail values of order 1e-20 stay fully accurate.
        """
        g = self.gain_flat
        denom = 1.0 + s * g
        u = self._segment_sum(self.c_flat / denom)
        v = self._segment_sum(self.c_flat * (s * g) / denom)
        empty = self.offsets[1:] == self.offsets[:-1]
        u[empty] = 1.0
        v[empty] = 0.0
        M = self.count_w.shape[1] - 1
        acc = np.zeros_like(u)
        partial = np.zeros_like(u)
        u_pow = np.ones_like(u)
        for a in range(1, M + 1):
            partial = partial + u_pow
            acc = acc + self.count_w[:, a] * partial
            u_pow = u_pow * u
        return v * acc

    def mixture(self, u: np.ndarray) -> np.ndarray:
        """Truncated-Poisson mixture of powers of the node average."""
        M = self.count_w.shape[1] - 1
        out = self.count_w[:, 0] * np.ones_like(u)
        u_pow = np.ones_like(u)
        for a in range(1, M + 1):
            u_pow = u_pow * u
            out = out + self.count_w[:, a] * u_pow
        return out

    def exponent(self, s) -> float | complex:
        one_minus = self.one_minus_mixture(s)
        val = np.dot(self.w_out, one_minus)
        return val if np.iscomplexobj(one_minus) else float(val)

    def exponent_derivatives(self, s: float, m: int) -> np.ndarray:
        """[A(s), A'(s), ..., A^(m)(s)] for A the exponent of 1/L."""
        rows = self.node_averages(s, m)
        u = rows[0]
        signs = np.array([(-1.0) ** r * factorial(r) for r in range(m + 1)])
        du = signs[:, None] * rows  # du[r] = u^(r); du[0] = u itself
        n = self.x_out.size
        M = self.count_w.shape[1] - 1

        # Partial Bell polynomials B[m][k] over (u', u'', ...), per node.
        bell = [[None] * (m + 1) for _ in range(m + 1)]
        bell[0][0] = np.ones(n)
        for mm in range(1, m + 1):
            bell[mm][0] = np.zeros(n)
            for k in range(1, mm + 1):
                acc = np.zeros(n)
                for j in range(1, mm - k + 2):
                    prev = bell[mm - j][k - 1]
                    if prev is not None:
                        acc = acc + comb(mm - 1, j - 1) * du[j] * prev
                bell[mm][k] = acc

        u_pow = np.ones((M + 1, n))
        for a in range(1, M + 1):
            u_pow[a] = u_pow[a - 1] * u

        out = np.empty(m + 1)
        out[0] = np.dot(self.w_out, self.one_minus_mixture(s))
        for mm in range(1, m + 1):
            f_deriv = np.zeros(n)
            for a in range(1, M + 1):
                acc = np.zeros(n)
                for k in range(1, min(mm, a) + 1):
                    falling = 1.0
                    for i in range(k):
                        falling *= a - i
                    acc = acc + falling * u_pow[a - k] * bell[mm][k]
                f_deriv = f_deriv + self.count_w[:, a] * acc
            out[mm] = -np.dot(self.w_out, f_deriv)
        return out


class InterferenceLT:
    """Evaluator for the interference Laplace transform and its derivatives.

    Immutable after construction; evaluation is pure and thread safe.  The
    constructor builds a refined tableau plus a coarser reference; their
    disagreement on a pilot grid provides the quadrature error estimate
    that every derivative-based quantity can check against.
    """

    def __init__(
        self,
        params: RadioParams,
        geom: CloudGeometry,
        level: int = 1,
        rtol: float = 1e-7,
        check: bool = True,
    ):
        self.params = params
        self.geom = geom
        self.rtol = rtol
        self._tab = _Tableau(params, geom, level)
        self._ref = _Tableau(params, geom, max(level - 1, 0))
        self.quadrature_error = 0.0
        if check and params.lam_p > 0:
            err = 0.0
            for s in self._pilot_grid():
                a = self._tab.exponent(s)
                b = self._ref.exponent(s)
                scale = max(abs(a), 1e-300)
                err = max(err, abs(a - b) / max(scale, 1.0))
            self.quadrature_error = err
            if err > rtol:
                raise InterferenceError(
                    f"tableau refinement disagrees by {err:.3e} (> rtol {rtol:.1e}); "
                    f"increase the quadrature level"
                )

    def _pilot_grid(self) -> list[float]:
        p = self.params
        anchors = [1.0 / p.sigma2, p.beta * self.geom.D**p.alpha_i / p.P]
        grid = []
        for a in anchors:
            grid.extend([0.01 * a, 0.1 * a, a, 10.0 * a])
        return sorted(set(grid))

    # -- evaluation ----------------------------------------------------

    def exponent(self, s) -> float | complex:
        """A(s) with L(s) = exp(-A(s)); accepts complex s with Re(s) >= 0."""
        if self.params.lam_p == 0:
            return 0.0
        return self._tab.exponent(s)

    def eval(self, s) -> float | complex:
        """L(s) = E[exp(-s I)]; exactly 1 at s = 0."""
        return np.exp(-self.exponent(s))

    def eval_many(self, s_values: np.ndarray) -> np.ndarray:
        s_values = np.asarray(s_values, dtype=float)
        out = np.empty(s_values.shape, dtype=float)
        flat = out.reshape(-1)
        for i, s in enumerate(s_values.reshape(-1)):
            flat[i] = self.eval(float(s))
        return out

    def shifted_lt_derivatives(
        self, s: float, m: int, with_error: bool = False
    ):
        """Derivatives d^r/ds^r of exp(-s sigma2) L(s) for r = 0..m.

        Computed from exponent derivatives through complete Bell
        polynomials, so the result carries quadrature error only.  With
        ``with_error`` the coarse-tableau value is used to bound it.
        """
        sigma2 = self.params.sigma2

        def assemble(tab: _Tableau | None) -> np.ndarray:
            if tab is None or self.params.lam_p == 0:
                a_der = np.zeros(m + 1)
            else:
                a_der = tab.exponent_derivatives(s, m)
            h0 = np.exp(-s * sigma2 - a_der[0])
            c = np.empty(m + 1)
            if m >= 1:
                c[1] = -sigma2 - a_der[1]
                for r in range(2, m + 1):
                    c[r] = -a_der[r]
            y = np.empty(m + 1)
            y[0] = 1.0
            for mm in range(1, m + 1):
                acc = 0.0
                for j in range(1, mm + 1):
                    acc += comb(mm - 1, j - 1) * c[j] * y[mm - j]
                y[mm] = acc
            return h0 * y

        fine = assemble(self._tab if self.params.lam_p > 0 else None)
        if not with_error:
            return fine
        ref = assemble(self._ref if self.params.lam_p > 0 else None)
        return fine, np.abs(fine - ref)

    def lt_derivative(self, m: int, s: float, rtol: float | None = None) -> float:
        """m-th derivative of exp(-s sigma2) L(s); sign alternates with m.

        (-1)^m times the result equals E[(I + sigma2)^m exp(-s (I +
        sigma2))] and is nonnegative.  Raises :class:`InterferenceError`
        when the estimated quadrature error exceeds ``rtol``.
        """
        if m < 0:
            raise ValueError("derivative order must be nonnegative")
        if m > self.params.M:
            raise ValueError(
                f"derivative order {m} exceeds the antenna count {self.params.M}"
            )
        values, err = self.shifted_lt_derivatives(s, m, with_error=True)
        tol = self.rtol if rtol is None else rtol
        scale = max(abs(values[m]), abs(values[0]))
        if scale > 0 and err[m] > tol * scale * 100:
            raise InterferenceError(
                f"derivative order {m} at s={s}: estimated error {err[m]:.3e} "
                f"exceeds tolerance"
            )
        return float(values[m])

    # -- moments and surrogate -----------------------------------------

    def moments(self) -> tuple[float, float]:
        """(E[I], E[I^2]) from exact derivatives of the exponent at zero."""
        if self.params.lam_p == 0:
            return 0.0, 0.0
        a_der = self._tab.exponent_derivatives(0.0, 2)
        e1 = a_der[1]
        e2 = a_der[1] ** 2 - a_der[2]
        return float(e1), float(e2)

    def gamma_fit(self) -> GammaSurrogate:
        """Gamma surrogate matching the first two interference moments."""
        e1, e2 = self.moments()
        var = e2 - e1 * e1
        if e1 <= 0 or var <= 0:
            raise InterferenceError(
                "degenerate interference distribution; Gamma fit needs "
                "positive mean and variance (is lam_p zero?)"
            )
        return GammaSurrogate(tau=e1 * e1 / var, zeta=var / e1)

    # -- density inversion ----------------------------------------------

    def gil_pelaez_pdf(
        self,
        gamma_val: float,
        tol: float = 1e-6,
        max_half_periods: int = 4000,
    ) -> tuple[float, float]:
        """Interference density by Fourier inversion of the transform.

        f(v) = (1/pi) * integral_0^inf Re(exp(-i v s) L(-i s)) ds,
        integrated over half-periods of the oscillation and accelerated
        with Wynn's epsilon algorithm.  Returns ``(density,
        error_estimate)``.  Validation tool; much slower than the Gamma
        surrogate.
        """
        if gamma_val <= 0:
            raise ValueError("density argument must be positive")
        if self.params.lam_p == 0:
            raise InterferenceError("interference is identically zero (lam_p = 0)")
        half = np.pi / gamma_val
        nodes, weights = np.polynomial.legendre.leggauss(16)

        def segment(k: int) -> float:
            a = k * half
            s = a + 0.5 * half * (nodes + 1.0)
            vals = np.empty(s.size)
            for i, sv in enumerate(s):
                vals[i] = (
                    np.exp(-1j * gamma_val * sv) * self.eval(complex(0.0, -sv))
                ).real
            return 0.5 * half * np.dot(weights, vals)

        partial = []
        total = 0.0
        best = np.inf
        best_err = np.inf
        for k in range(max_half_periods):
            total += segment(k)
            partial.append(total)
            if len(partial) >= 6:
                est = _wynn_epsilon(np.array(partial[-24:]))
                err = abs(est - best)
                if err < tol * max(1.0, abs(est)):
                    return est / np.pi, err / np.pi
                if err < best_err:
                    best_err = err
                best = est
        raise InterferenceError(
            f"oscillatory inversion did not settle after {max_half_periods} "
            f"half-periods (last change {best_err:.3e})"
        )

    # -- pointwise inner profile -----------------------------------------

    def inner_profile(self, s, x: float) -> float | complex:
        """Psi(s, x): the per-cloud factor at center distance ``x``.

        Mixture over the truncated Poisson active count of powers of the
        eligible-node average of 1 / (1 + s P y^(-alpha_o)).
        """
        p = self.params
        area = guard_excluded_area(x, self.geom)
        w = _active_count_weights(p.lam * area, p.M)
        y, c = _eligible_distance_rule(
            x, self.geom.D, self.geom.d_g, 48, 64
        )
        if y.size == 0:
            return 1.0
        u = np.sum(c / (1.0 + s * p.P * y**-p.alpha_o))
        return sum(w[a] * u**a for a in range(p.M + 1))


def _wynn_epsilon(s: np.ndarray) -> float:
    """Shanks-type acceleration of a partial-sum sequence (Wynn's epsilon).

    Even columns of the epsilon table hold the accelerated estimates; the
    deepest finite even-column entry is returned.
    """
    prev = np.zeros(s.size + 1)
    curr = s.astype(float).copy()
    best = curr[-1]
    col = 0
    while curr.size > 1:
        diff = np.diff(curr)
        if np.any(diff == 0.0):
            break
        nxt = prev[1 : curr.size] + 1.0 / diff
        prev, curr = curr, nxt
        col += 1
        if not np.all(np.isfinite(curr)):
            break
        if col % 2 == 0:
            best = curr[-1]
    return float(best)


# -- module-level operation names -----------------------------------------


def lt_inner_F(s: float, x: float, ctx: InterferenceLT):
    """Per-cloud factor in the near regime (cloud disk may cover the user)."""
    if not 0 <= x < max(ctx.geom.D, ctx.geom.d_g - ctx.geom.D):
        raise ValueError(f"near-regime profile needs x < {ctx.geom.D}, got {x}")
    return ctx.inner_profile(s, x)


def lt_inner_E(s: float, x: float, ctx: InterferenceLT):
    """Per-cloud factor in the far regime (cloud disk excludes the user)."""
    if x < max(ctx.geom.D, ctx.geom.d_g - ctx.geom.D):
        raise ValueError(f"far-regime profile needs x >= {ctx.geom.D}, got {x}")
    return ctx.inner_profile(s, x)


def lt_eval(s: float, ctx: InterferenceLT):
    return ctx.eval(s)


def lt_derivative(m: int, s: float, ctx: InterferenceLT) -> float:
    return ctx.lt_derivative(m, s)


def lt_moments(ctx: InterferenceLT) -> tuple[float, float]:
    return ctx.moments()


def gamma_fit(ctx: InterferenceLT) -> GammaSurrogate:
    return ctx.gamma_fit()


def gil_pelaez_pdf(gamma_val: float, ctx: InterferenceLT) -> float:
    return ctx.gil_pelaez_pdf(gamma_val)[0]
