"""Closed-form selected-SNR curves and the incomplete-gamma routines behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_MAX_ITER = 600


def _lgamma(a: np.ndarray) -> np.ndarray:
    """Elementwise log-gamma; cheap for the few distinct shapes we see."""
    vals, inv = np.unique(a, return_inverse=True)
    table = np.array([math.lgamma(v) for v in vals])
    return table[inv].reshape(a.shape)


def _series_p(a: float, x: np.ndarray) -> np.ndarray:
    # P(a,x) = x^a e^-x / Gamma(a+1) * sum_{n>=0} x^n / ((a+1)...(a+n)),  x < a+1
    total = np.ones_like(x)
    term = np.ones_like(x)
    active = np.arange(x.size)
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term[active] *= x[active] / ap
        total[active] += term[active]
        live = term[active] > 1e-17 * total[active]
        if not live.any():
            break
        active = active[live]
    with np.errstate(divide="ignore", invalid="ignore"):
        logpre = a * np.log(x) - x - math.lgamma(a + 1.0)
    out = total * np.exp(logpre)
    out[x == 0.0] = 0.0
    return out


def _contfrac_q(a: float, x: np.ndarray) -> np.ndarray:
    # Q(a,x) via modified Lentz continued fraction, x >= a+1
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / np.where(b == 0.0, tiny, b)
    h = d.copy()
    active = np.arange(x.size)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b[active] += 2.0
        da = an * d[active] + b[active]
        da[da == 0.0] = tiny
        ca = b[active] + an / c[active]
        ca[ca == 0.0] = tiny
        da = 1.0 / da
        d[active] = da
        c[active] = ca
        delta = da * ca
        h[active] *= delta
        live = np.abs(delta - 1.0) >= 1e-16
        if not live.any():
            break
        active = active[live]
    return np.exp(a * np.log(x) - x - math.lgamma(a)) * h


def _gamma_p_scalar_shape(a: float, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    small = x < a + 1.0
    if small.any():
        out[small] = _series_p(a, x[small])
    if not small.all():
        out[~small] = 1.0 - _contfrac_q(a, x[~small])
    return np.clip(out, 0.0, 1.0)


def regularized_gamma_p(a, x):
    """Regularized lower incomplete gamma P(a, x), elementwise.

    Series expansion for x < a+1, continued fraction otherwise; absolute
    accuracy better than 1e-12 over the tested domain.
    """
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(a_arr <= 0.0):
        raise ValueError("shape parameter a must be positive")
    if np.any(x_arr < 0.0):
        raise ValueError("x must be nonnegative")
    if a_arr.ndim == 0:
        scalar = x_arr.ndim == 0
        flat = np.atleast_1d(x_arr).astype(float).ravel()
        out = _gamma_p_scalar_shape(float(a_arr), flat).reshape(np.shape(x_arr))
        return float(out) if scalar else out
    a_b, x_b = np.broadcast_arrays(a_arr, x_arr)
    out = np.empty(a_b.shape, dtype=float)
    for val in np.unique(a_b):
        mask = a_b == val
        out[mask] = _gamma_p_scalar_shape(float(val), np.ascontiguousarray(x_b[mask]))
    return out


def lower_incomplete_gamma(a, x):
    """Unregularized lower incomplete gamma(a, x) = int_0^x t^(a-1) e^-t dt."""
    p = regularized_gamma_p(a, x)
    gamma_a = np.exp(_lgamma(np.atleast_1d(np.asarray(a, float))))
    if np.isscalar(p) or getattr(p, "ndim", 0) == 0:
        return float(p) * float(gamma_a[0])
    return p * np.exp(_lgamma(np.asarray(np.broadcast_to(a, np.shape(p)), float)))


@dataclass(frozen=True)
class AnalyticCurve:
    """A closed-form CDF / probability curve tabulated on an ascending SNR grid."""

    grid: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise ValueError("grid/value length mismatch")

    def evaluate(self, s) -> np.ndarray:
        return np.interp(s, self.grid, self.values, left=0.0, right=1.0)


def _quantile(cdf, p: float) -> float:
    """Invert a monotone CDF callable by bracketed bisection."""
    lo, hi = 1e-30, 1.0
    for _ in range(4000):
        if cdf(hi) >= p:
            break
        hi *= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return hi


def make_log_grid(cdf, n: int = 2048, p_lo: float = 1e-4, p_hi: float = 1.0 - 1e-4) -> np.ndarray:
    """Logarithmic SNR grid spanning the [p_lo, p_hi] quantiles of a CDF."""
    s_lo = _quantile(cdf, p_lo)
    s_hi = _quantile(cdf, p_hi)
    return np.geomspace(s_lo, s_hi, n)


def _cdf_guard(values: np.ndarray) -> np.ndarray:
    # roundoff guard: clamp into [0,1] and restore monotonicity on the grid
    return np.maximum.accumulate(np.clip(values, 0.0, 1.0))


def bcs_selected_cdf(base, K: int, grid: np.ndarray | None = None) -> AnalyticCurve:
    """Selected-SNR CDF under single-user CDF competition: F^K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    f = base.evaluate if hasattr(base, "evaluate") else base
    if grid is None:
        grid = make_log_grid(f)
    return AnalyticCurve(grid, _cdf_guard(np.asarray(f(grid)) ** K), {"kind": "bcs-selected", "K": K})


def cfs_selected_cdfs(base_c, base_d, K1: int, K2: int,
                      grid_c: np.ndarray | None = None,
                      grid_d: np.ndarray | None = None) -> tuple[AnalyticCurve, AnalyticCurve]:
    """Selected-SNR CDFs under the cellular-threshold policy.

    Cellular: max(0, (K/K1) F_c^K1 - 2 K2/K1); D2D users see their base CDF.
    """
    if K1 < 1:
        raise ValueError("K1 must be >= 1")
    K = K1 + 2 * K2
    fc = base_c.evaluate if hasattr(base_c, "evaluate") else base_c
    fd = base_d.evaluate if hasattr(base_d, "evaluate") else base_d
    if grid_c is None:
        grid_c = make_log_grid(fc)
    if grid_d is None:
        grid_d = make_log_grid(fd)
    cell = (K / K1) * np.asarray(fc(grid_c)) ** K1 - 2.0 * K2 / K1
    cell_curve = AnalyticCurve(grid_c, _cdf_guard(cell), {"kind": "cfs-selected-cellular", "K1": K1, "K2": K2})
    d2d_curve = AnalyticCurve(grid_d, _cdf_guard(np.asarray(fd(grid_d))), {"kind": "cfs-selected-d2d"})
    return cell_curve, d2d_curve


def dfs_selected_cdfs(base_c, base_d, K: int,
                      grid_c: np.ndarray | None = None,
                      grid_d: np.ndarray | None = None) -> tuple[AnalyticCurve, AnalyticCurve]:
    """Selected-SNR CDFs with pairs as double-weight contenders: F_c^K and F_d^(K/2)."""
    if K < 2:
        raise ValueError("K must be >= 2")
    fc = base_c.evaluate if hasattr(base_c, "evaluate") else base_c
    fd = base_d.evaluate if hasattr(base_d, "evaluate") else base_d
    if grid_c is None:
        grid_c = make_log_grid(fc)
    if grid_d is None:
        grid_d = make_log_grid(fd)
    cell = AnalyticCurve(grid_c, _cdf_guard(np.asarray(fc(grid_c)) ** K), {"kind": "dfs-selected-cellular", "K": K})
    d2d = AnalyticCurve(grid_d, _cdf_guard(np.asarray(fd(grid_d)) ** (K / 2.0)), {"kind": "dfs-selected-d2d", "K": K})
    return cell, d2d


def gfs_selected_cdf(base, m_i: int, mu_i: float, grid: np.ndarray | None = None) -> AnalyticCurve:
    """Selected-SNR CDF for a member of a size-m_i sharing group with selection factor mu_i."""
    if m_i < 1:
        raise ValueError("m_i must be >= 1")
    if mu_i <= 1.0:
        raise ValueError("mu_i must exceed 1")
    f = base.evaluate if hasattr(base, "evaluate") else base
    if grid is None:
        grid = make_log_grid(f)
    F = np.asarray(f(grid))
    vals = (mu_i * (m_i - 1)) / (m_i * (mu_i - 1)) * F \
        + (mu_i - m_i) / (m_i * (mu_i - 1)) * F ** mu_i
    return AnalyticCurve(grid, _cdf_guard(vals), {"kind": "group-selected", "m_i": m_i, "mu_i": mu_i})


# ---------------------------------------------------------------------------
# unconditional curves (spatial distribution integrated out, m = 1 fading)

def _kahan_sum(terms) -> float:
    total = 0.0
    comp = 0.0
    for t in terms:
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def _cell_unconditional(s: float, K: int, A_c: float, R_B: float, eta_c: float) -> float:
    a = 2.0 / eta_c
    log_binom = [math.lgamma(K + 1) - math.lgamma(i + 1) - math.lgamma(K - i + 1)
                 for i in range(1, K + 1)]
    terms = []
    for i in range(1, K + 1):
        x = i * A_c * s
        g = regularized_gamma_p(a, x * R_B ** eta_c) * math.gamma(a)
        log_mag = log_binom[i - 1] + math.log(2.0 / (eta_c * R_B ** 2)) - a * math.log(x)
        terms.append((-1.0) ** i * math.exp(log_mag) * g)
    return 1.0 + _kahan_sum(terms)


def _d2d_unconditional(s: float, K: int, A_d: float, d_min: float, d_max: float,
                       eta_d: float, eps: float, truncate: str) -> tuple[float, float]:
    """Returns (value, tail_bound).  Alternating binomial series in the half
    exponent K/2; terminates at K/2 terms for even K, eps-truncated otherwise."""
    a = 1.0 / eta_d
    delta = d_max - d_min
    gamma_hi_base = d_max ** eta_d
    gamma_lo_base = d_min ** eta_d
    h = K / 2.0
    coef = 1.0           # running generalized binomial(h, i)
    total = 0.0
    comp = 0.0
    tail = 0.0
    i = 0
    while True:
        i += 1
        coef *= (h - i + 1.0) / i
        if coef == 0.0:
            break
        x = i * A_d * s
        bracket = (regularized_gamma_p(a, x * gamma_hi_base)
                   - regularized_gamma_p(a, x * gamma_lo_base)) * math.gamma(a)
        term = (-1.0) ** i * coef * bracket / (eta_d * delta * x ** a)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if truncate == "auto" and K % 2 == 0 and i >= K // 2:
            break
        if abs(term) < eps and i > h:
            tail = abs(term)
            break
        if i > 200000:
            raise RuntimeError("unconditional D2D series failed to converge")
    return 1.0 + total, tail


def dfs_unconditional_cdfs(config, K: int, truncation_eps: float = 1e-10,
                           n_grid: int = 2048, truncate: str = "auto",
                           grid_c: np.ndarray | None = None,
                           grid_d: np.ndarray | None = None) -> tuple[AnalyticCurve, AnalyticCurve]:
    """Unconditional downlink selected-SNR curves for cellular users and pairs.

    Only valid for unit Nakagami shape (exponential fading power).
    """
    shapes = config.shapes_per_contender()
    if np.any(shapes != 1.0):
        raise ValueError("unconditional curves require fading_shape_m = 1")
    A_c = config.noise_power_mw / (config.pathloss_const_cellular * config.tx_power_dl_mw)
    A_d = config.noise_power_mw / (config.pathloss_const_d2d * config.tx_power_d2d_mw)

    def f_cell(s):
        return _cell_unconditional(float(s), K, A_c, config.cell_radius_m, config.pathloss_exp_cellular)

    def f_d2d(s):
        return _d2d_unconditional(float(s), K, A_d, config.d2d_min_m, config.d2d_max_m,
                                  config.pathloss_exp_d2d, truncation_eps, truncate)[0]

    if grid_c is None:
        grid_c = make_log_grid(f_cell, n_grid)
    if grid_d is None:
        grid_d = make_log_grid(f_d2d, n_grid)
    cell_vals = np.array([f_cell(s) for s in grid_c])
    d2d_out = [_d2d_unconditional(float(s), K, A_d, config.d2d_min_m, config.d2d_max_m,
                                  config.pathloss_exp_d2d, truncation_eps, truncate)
               for s in grid_d]
    d2d_vals = np.array([v for v, _ in d2d_out])
    tail_bound = max((t for _, t in d2d_out), default=0.0)
    cell_curve = AnalyticCurve(grid_c, _cdf_guard(cell_vals),
                               {"kind": "dfs-unconditional-cellular", "K": K, "A_c": A_c})
    d2d_curve = AnalyticCurve(grid_d, _cdf_guard(d2d_vals),
                              {"kind": "dfs-unconditional-d2d", "K": K, "A_d": A_d,
                               "tail_bound": tail_bound})
    return cell_curve, d2d_curve


# ---------------------------------------------------------------------------
# per-user performance-index references

def cfs_threshold(K1: int, K2: int) -> float:
    K = K1 + 2 * K2
    if K1 < 1:
        raise ValueError("K1 must be >= 1")
    return ((K - K1) / K) ** (1.0 / K1)


def upi_reference(policy: str, *, K: int | None = None, K1: int | None = None,
                  K2: int | None = None, structure=None, weights=None):
    """Closed-form per-user performance-index values, where one exists.

    bcs -> 2/(K+1) for everyone; cfs -> cellular closed form, D2D undefined
    (None); gfs -> nu_i (m_i+1)/(mu_i+1) per group.
    """
    if policy == "bcs":
        return np.full(K, 2.0 / (K + 1))
    if policy == "cfs":
        u_th = cfs_threshold(K1, K2)
        cell = 2.0 * (1.0 - u_th ** (K1 + 1)) / (K1 + 1)
        return {"cellular": cell, "d2d": None}
    if policy == "gfs":
        nu = np.array([g.nu for g in structure.groups])
        m = np.array([g.size for g in structure.groups], dtype=float)
        return nu * (m + 1.0) / (np.asarray(weights.mu) + 1.0)
    raise ValueError(f"no closed-form reference for policy {policy!r}")
