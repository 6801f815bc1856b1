"""Monte Carlo ground truth for the clustered caching model.

Samples the full spatial model (Poisson cloud centers, per-cloud Poisson
nodes on a disk, guard-disk exclusion, truncated active sets, exponential
interferer fades, effective serving gains), applies the serving-selection
rules, and estimates hit probabilities and interference statistics.

Determinism contract: trials are partitioned into blocks and every block
draws from an independent substream derived from ``(seed, stream, block)``,
so results are reproducible and independent of how blocks are scheduled.
The per-trial serving scans run through a compiled kernel when available
(see :mod:`cloudcache._backend`); both backends produce identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._backend import cloud_interference, disk_distances, serve_powers
from .config import NetworkConfig
from .content import CachePolicy, sample_cache_contents
from .geometry import CloudGeometry, guard_excluded_area_arr
from .interference import RadioParams

_REJECTION_CAP = 10_000

# Independent substream labels; annulus streams occupy 100, 101, ...
_STREAM_HIT = 0
_STREAM_INTERFERENCE = 1
_STREAM_ZF = 2
_STREAM_REALIZATION = 3
_STREAM_ANNULUS = 100


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimatorResult:
    """Point estimate with a 95% confidence half width."""

    estimate: float
    half_width: float
    trials: int
    seed: int


@dataclass
class NetworkRealization:
    """One draw of the spatial model around a user at the origin."""

    geom: CloudGeometry
    rep_positions: np.ndarray  # (n, 2) about the cloud center at (x_norm, 0)
    rep_distances: np.ndarray  # (n,) distances to the origin
    rep_cache_sets: list[set[int]]
    interferer_centers: np.ndarray  # (m, 2)
    active_positions: list[np.ndarray]  # per interferer, (a_i, 2)
    active_gains: list[np.ndarray]  # per interferer, Exp(1) fades
    interference: float = field(default=0.0)

    @property
    def n_rep(self) -> int:
        return self.rep_distances.size


def _rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, stream, block)))


def default_window(cfg: NetworkConfig) -> float:
    """Default interferer window radius (40 cloud radii plus the guard)."""
    return 40.0 * cfg.D + cfg.d_g


def window_tail_mean(cfg: NetworkConfig, radius: float) -> float:
    """Upper bound on the mean interference ignored beyond ``radius``.

    Each far cloud contributes at most M unit-mean fades at distance at
    least x - D, so the neglected mean is below
    2 pi lam_p M P * integral_radius^inf x (x - D)^(-alpha_o) dx.
    """
    ao = cfg.alpha_o
    u = radius - cfg.D
    if u <= 0:
        return np.inf
    integral = u ** (2.0 - ao) / (ao - 2.0) + cfg.D * u ** (1.0 - ao) / (ao - 1.0)
    return 2.0 * np.pi * cfg.lam_p * cfg.M * cfg.P * integral


def _rep_distances(
    rng: np.random.Generator, centers: np.ndarray, D: float
) -> np.ndarray:
    """Distances to the origin of points uniform on disks with given center radii."""
    u1 = rng.random(centers.size)
    u2 = rng.random(centers.size)
    return disk_distances(np.ascontiguousarray(centers), u1, u2, D)


def _interference_block(
    rng: np.random.Generator,
    trials: int,
    params: RadioParams,
    geom: CloudGeometry,
    r_lo: float,
    r_hi: float,
) -> np.ndarray:
    """Out-of-cloud interference from clouds with centers in [r_lo, r_hi).

    Per cloud: eligible node count Poisson(lam * area outside the guard
    disk), active set min(M, eligible) placed uniformly on the eligible
    region, Exp(1) fades, pathloss alpha_o.  Clouds overlapping the guard
    disk (center distance below D + d_g) place nodes by rejection against
    the guard; all others go through the backend kernel directly.
    Returns one interference total per trial.
    """
    D, d_g = geom.D, geom.d_g
    mean_clouds = params.lam_p * np.pi * (r_hi * r_hi - r_lo * r_lo)
    n_clouds = rng.poisson(mean_clouds, trials)
    total = int(n_clouds.sum())
    out = np.zeros(trials)
    if total == 0:
        return out
    x = np.sqrt(r_lo * r_lo + (r_hi * r_hi - r_lo * r_lo) * rng.random(total))

    mean_elig = params.lam * guard_excluded_area_arr(x, D, d_g)
    n_elig = rng.poisson(mean_elig)
    active = np.minimum(params.M, n_elig).astype(np.int64)

    if d_g > 0 and r_lo < D + d_g:
        near = x < D + d_g
    else:
        near = np.zeros(total, dtype=bool)
    far = ~near
    trial_of_cloud = np.repeat(np.arange(trials), n_clouds)

    n_far_nodes = int(active[far].sum())
    if n_far_nodes:
        far_counts = np.bincount(trial_of_cloud[far], minlength=trials).astype(
            np.int64
        )
        u1 = rng.random(n_far_nodes)
        u2 = rng.random(n_far_nodes)
        fades = rng.standard_exponential(n_far_nodes)
        out += cloud_interference(
            np.ascontiguousarray(x[far]),
            far_counts,
            np.ascontiguousarray(active[far]),
            u1,
            u2,
            fades,
            params.P,
            D,
            params.alpha_o,
        )

    if np.any(near):
        x_n = np.repeat(x[near], active[near])
        trial_n = np.repeat(trial_of_cloud[near], active[near])
        y = _rep_distances(rng, x_n, D)
        bad = y < d_g
        rounds = 0
        while np.any(bad):
            y[bad] = _rep_distances(rng, x_n[bad], D)
            bad = y < d_g
            rounds += 1
            if rounds > _REJECTION_CAP:
                raise SimulationError(
                    "guard-disk rejection sampling did not terminate; "
                    "eligible area is vanishingly small"
                )
        fades = rng.standard_exponential(y.size)
        contrib = params.P * fades * y**-params.alpha_o
        out += np.bincount(trial_n, weights=contrib, minlength=trials)
    return out


# -- object-level sampling (unit-scale API) ---------------------------------


def sample_realization(
    cfg: NetworkConfig,
    rng: np.random.Generator,
    policy: CachePolicy | None = None,
    window_radius: float | None = None,
) -> NetworkRealization:
    """Draw one full network realization.

    The representative cloud center sits at ``(cfg.d, 0)``; its node
    count is Poisson(lam pi D^2) with uniform positions and per-node
    cache sets (independent Bernoulli placement).  Interfering cloud
    centers are Poisson in a disk of ``window_radius``; their active
    nodes avoid the guard disk.  ``policy`` defaults to the uniform
    budget split p_i = N_c / N.
    """
    params = cfg.radio()
    geom = cfg.geometry()
    if policy is None:
        policy = CachePolicy(p=np.full(cfg.N, cfg.N_c / cfg.N), N_c=cfg.N_c)
    radius = default_window(cfg) if window_radius is None else window_radius

    n = rng.poisson(params.lam * np.pi * cfg.D**2)
    u = rng.random(n)
    th = 2.0 * np.pi * rng.random(n)
    r = cfg.D * np.sqrt(u)
    rep_positions = np.column_stack(
        (cfg.d + r * np.cos(th), r * np.sin(th))
    )
    rep_distances = np.hypot(rep_positions[:, 0], rep_positions[:, 1])
    cache_sets = [sample_cache_contents(policy, rng) for _ in range(n)]

    m = rng.poisson(params.lam_p * np.pi * radius**2)
    cu = rng.random(m)
    cth = 2.0 * np.pi * rng.random(m)
    cr = radius * np.sqrt(cu)
    centers = np.column_stack((cr * np.cos(cth), cr * np.sin(cth)))

    active_positions: list[np.ndarray] = []
    active_gains: list[np.ndarray] = []
    interference = 0.0
    for j in range(m):
        area = guard_excluded_area_arr(np.array([cr[j]]), cfg.D, cfg.d_g)[0]
        n_elig = rng.poisson(params.lam * area)
        a = min(params.M, n_elig)
        pts = np.empty((a, 2))
        filled = 0
        rounds = 0
        while filled < a:
            need = a - filled
            pu = rng.random(need)
            pth = 2.0 * np.pi * rng.random(need)
            pr = cfg.D * np.sqrt(pu)
            cand = centers[j] + np.column_stack(
                (pr * np.cos(pth), pr * np.sin(pth))
            )
            ok = np.hypot(cand[:, 0], cand[:, 1]) >= cfg.d_g
            take = cand[ok]
            pts[filled : filled + take.shape[0]] = take
            filled += take.shape[0]
            rounds += 1
            if rounds > _REJECTION_CAP:
                raise SimulationError("guard-disk rejection did not terminate")
        gains = rng.standard_exponential(a)
        dists = np.hypot(pts[:, 0], pts[:, 1])
        interference += float(
            np.sum(params.P * gains * dists**-params.alpha_o)
        )
        active_positions.append(pts)
        active_gains.append(gains)

    return NetworkRealization(
        geom=geom,
        rep_positions=rep_positions,
        rep_distances=rep_distances,
        rep_cache_sets=cache_sets,
        interferer_centers=centers,
        active_positions=active_positions,
        active_gains=active_gains,
        interference=interference,
    )


def simulate_hit(
    real: NetworkRealization,
    i: int,
    strategy: str,
    rng: np.random.Generator,
    params: RadioParams,
) -> bool:
    """Hit/miss outcome for file ``i`` on one realization.

    Miss when no representative node caches the file.  Otherwise the
    serving node follows the strategy ("closest" or "best"); its
    effective gain given l = min(M, n) active nodes is Gamma(M - l + 1, 1)
    (the zero-forcing beamforming reduction), and the SINR is compared
    against the threshold with the realization's interference.
    """
    caching = [j for j, s in enumerate(real.rep_cache_sets) if i in s]
    if not caching:
        return False
    l = min(params.M, real.n_rep)
    shape = params.M - l + 1
    d = real.rep_distances[caching]
    if strategy == "closest":
        g = rng.gamma(shape)
        power = params.P * g * d.min() ** -params.alpha_i
    elif strategy == "best":
        g = rng.gamma(shape, size=d.size)
        power = float(np.max(params.P * g * d**-params.alpha_i))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return power > params.beta * (params.sigma2 + real.interference)


# -- vectorized estimation ---------------------------------------------------


@dataclass(frozen=True)
class HitCell:
    """One evaluation cell sharing the spatial pass: threshold + placement."""

    beta: float
    policy: CachePolicy
    strategy: str

    def __post_init__(self):
        if self.strategy not in ("closest", "best"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.beta <= 0:
            raise ValueError("SINR threshold must be positive")


def estimate_hit_cells(
    cfg: NetworkConfig,
    cells: list[HitCell],
    trials: int,
    seed: int,
    window_radius: float | None = None,
    block_size: int = 512,
) -> list[tuple[list[EstimatorResult], EstimatorResult]]:
    """Hit estimates for several (beta, policy, strategy) cells in one pass.

    Cloud geometry, serving gains, and interference do not depend on the
    SINR threshold, the cache placement, or the selection rule, so all
    cells share those draws (common random numbers); only the per-file
    cache marks are drawn per cell.  Each cell's estimate and confidence
    interval are individually valid.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    params = cfg.radio()
    geom = cfg.geometry()
    for cell in cells:
        if cell.policy.N != cfg.N:
            raise ValueError("policy length does not match the library size")
    radius = default_window(cfg) if window_radius is None else window_radius
    q = cfg.popularity().q

    nu = params.lam * np.pi * cfg.D**2
    file_hits = np.zeros((len(cells), cfg.N))
    net_sum = np.zeros(len(cells))
    net_sq = np.zeros(len(cells))
    done = 0
    block = 0
    while done < trials:
        b = min(block_size, trials - done)
        rng = _rng(seed, _STREAM_HIT, block)

        n_rep = rng.poisson(nu, b)
        offsets = np.zeros(b + 1, dtype=np.int64)
        np.cumsum(n_rep, out=offsets[1:])
        total = int(offsets[-1])
        centers = np.full(total, float(cfg.d))
        dist = _rep_distances(rng, centers, cfg.D)
        shape_per_trial = params.M - np.minimum(params.M, n_rep) + 1
        gains = rng.gamma(np.repeat(shape_per_trial, n_rep).astype(float))
        interference = _interference_block(rng, b, params, geom, 0.0, radius)
        power = params.P * gains * dist**-params.alpha_i

        for c, cell in enumerate(cells):
            k_mat = rng.binomial(n_rep[:, None], cell.policy.p[None, :]).astype(
                np.int64
            )
            served = serve_powers(power, dist, offsets, k_mat)[
                0 if cell.strategy == "closest" else 1
            ]
            hits = served > cell.beta * (params.sigma2 + interference)[:, None]
            file_hits[c] += hits.sum(axis=0)
            h = hits @ q
            net_sum[c] += float(h.sum())
            net_sq[c] += float(np.dot(h, h))
        done += b
        block += 1

    results = []
    for c in range(len(cells)):
        per_file = []
        for i in range(cfg.N):
            est = file_hits[c, i] / trials
            hw = 1.96 * np.sqrt(max(est * (1.0 - est), 0.0) / trials)
            per_file.append(
                EstimatorResult(
                    estimate=est, half_width=hw, trials=trials, seed=seed
                )
            )
        mean = net_sum[c] / trials
        var = max(net_sq[c] / trials - mean * mean, 0.0)
        if trials > 1:
            var *= trials / (trials - 1.0)
        network = EstimatorResult(
            estimate=mean,
            half_width=1.96 * np.sqrt(var / trials),
            trials=trials,
            seed=seed,
        )
        results.append((per_file, network))
    return results


def estimate_hit(
    cfg: NetworkConfig,
    policy: CachePolicy,
    strategy: str,
    trials: int,
    seed: int,
    window_radius: float | None = None,
    block_size: int = 512,
) -> tuple[list[EstimatorResult], EstimatorResult]:
    """Per-file and network hit estimates over independent realizations.

    The network estimate is the popularity-weighted per-trial hit
    indicator averaged across trials; its confidence interval comes from
    the per-trial sample variance, which stays valid although files share
    geometry and interference within a trial.
    """
    cell = HitCell(beta=cfg.beta, policy=policy, strategy=strategy)
    return estimate_hit_cells(
        cfg, [cell], trials, seed, window_radius=window_radius,
        block_size=block_size,
    )[0]


def sample_interference(
    cfg: NetworkConfig,
    trials: int,
    seed: int,
    window_radius: float | None = None,
    block_size: int = 4096,
) -> np.ndarray:
    """I.i.d. draws of the out-of-cloud interference power."""
    params = cfg.radio()
    geom = cfg.geometry()
    radius = default_window(cfg) if window_radius is None else window_radius
    chunks = []
    done = 0
    block = 0
    while done < trials:
        b = min(block_size, trials - done)
        rng = _rng(seed, _STREAM_INTERFERENCE, block)
        chunks.append(_interference_block(rng, b, params, geom, 0.0, radius))
        done += b
        block += 1
    return np.concatenate(chunks)


@dataclass(frozen=True)
class LTValidation:
    """Monte Carlo transform estimates with propagated 99% intervals."""

    s_values: np.ndarray
    estimates: np.ndarray
    ci99: np.ndarray
    trials: int
    seed: int
    outer_radius: float
    tail_mean_bound: float


def lt_mc_estimate(
    cfg: NetworkConfig,
    s_values,
    trials: int,
    seed: int,
    n_annuli: int = 6,
    base_window: float | None = None,
    block_size: int = 4096,
) -> LTValidation:
    """Estimate E[exp(-s I)] by a product over independent radial regions.

    Interference contributions from disjoint annuli are independent, so
    the transform factorizes; each annulus factor is estimated from its
    own realizations.  Far annuli have tiny variance and get geometrically
    fewer realizations, which makes the effective window 2^n_annuli times
    the base one affordable; the remaining truncation bias is bounded by
    ``tail_mean_bound`` (mean interference beyond the outer radius).
    """
    params = cfg.radio()
    geom = cfg.geometry()
    s_values = np.asarray(s_values, dtype=float)
    r0 = default_window(cfg) if base_window is None else base_window

    regions: list[tuple[float, float, int]] = [(0.0, r0, trials)]
    for k in range(1, n_annuli + 1):
        n_k = max(24, int(np.ceil(trials * 0.006 * 4.0 ** (1 - k))))
        regions.append((r0 * 2.0 ** (k - 1), r0 * 2.0**k, min(n_k, trials)))

    est = np.ones(s_values.size)
    rel_var = np.zeros(s_values.size)
    for idx, (r_lo, r_hi, n_r) in enumerate(regions):
        means = np.zeros(s_values.size)
        sqs = np.zeros(s_values.size)
        done = 0
        block = 0
        while done < n_r:
            b = min(block_size, n_r - done)
            rng = _rng(seed, _STREAM_ANNULUS + idx, block)
            samples = _interference_block(rng, b, params, geom, r_lo, r_hi)
            e = np.exp(-np.outer(s_values, samples))
            means += e.sum(axis=1)
            sqs += (e * e).sum(axis=1)
            done += b
            block += 1
        means /= n_r
        sqs /= n_r
        var = np.maximum(sqs - means * means, 0.0)
        if n_r > 1:
            var *= n_r / (n_r - 1.0)
        if np.any(means <= 0):
            raise SimulationError(
                "annulus transform estimate vanished; increase trials"
            )
        est *= means
        rel_var += var / (n_r * means * means)

    outer = r0 * 2.0**n_annuli
    return LTValidation(
        s_values=s_values,
        estimates=est,
        ci99=2.5758 * est * np.sqrt(rel_var),
        trials=trials,
        seed=seed,
        outer_radius=outer,
        tail_mean_bound=window_tail_mean(cfg, outer),
    )


# -- zero-forcing gain validation --------------------------------------------


@dataclass(frozen=True)
class ZFGainReport:
    ks_statistic: float
    p_value: float
    passed: bool
    trials: int


def validate_zf_gain(M: int, l: int, trials: int, seed: int) -> ZFGainReport:
    """Goodness of fit of the explicit beamforming gain to Gamma(M - l + 1, 1).

    Samples M-antenna complex Gaussian channels, forms the beamformer that
    nulls l - 1 co-scheduled users and maximizes the intended user's
    power (projection onto the nulled channels' orthogonal complement),
    and KS-tests the resulting effective gain.
    """
    if not 1 <= l <= M:
        raise ValueError(f"need 1 <= l <= M, got l={l}, M={M}")
    rng = _rng(seed, _STREAM_ZF, 0)

    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    h0 = cn(trials, M)
    if l == 1:
        gains = np.sum(np.abs(h0) ** 2, axis=1)
    else:
        h_null = cn(trials, M, l - 1)
        q_mat, _ = np.linalg.qr(h_null)
        coeff = np.einsum("tmk,tm->tk", q_mat.conj(), h0)
        resid = h0 - np.einsum("tmk,tk->tm", q_mat, coeff)
        gains = np.sum(np.abs(resid) ** 2, axis=1)
    ks = stats.kstest(gains, "gamma", args=(M - l + 1, 0, 1))
    return ZFGainReport(
        ks_statistic=float(ks.statistic),
        p_value=float(ks.pvalue),
        passed=bool(ks.pvalue > 0.01),
        trials=trials,
    )
