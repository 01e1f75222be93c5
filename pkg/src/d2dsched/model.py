"""Scenario configuration and user geometry.

All dB/dBm quantities live only in the config; everything downstream of the
config object works in linear units.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

import numpy as np

POLICIES = ("bcs", "cfs", "dfs", "gfs", "ecs", "pfs", "grr")

_INT_KEYS = {"K1", "K2", "slots_per_realization", "spatial_realizations", "rng_seed", "resources"}
_BOOL_KEYS = {"cfs_d2d_random"}
_STR_KEYS = {"policy"}


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario parameters.  Defaults follow the standard simulation setup."""

    K1: int = 10                          # cellular users
    K2: int = 5                           # D2D pairs
    cell_radius_m: float = 1000.0
    d2d_min_m: float = 1.0
    d2d_max_m: float = 40.0
    pathloss_const_cellular_db: float = -31.0
    pathloss_const_d2d_db: float = -31.0
    pathloss_exp_cellular: float = 3.5
    pathloss_exp_d2d: float = 3.0
    noise_power_dbm: float = -100.0
    tx_power_dl_dbm: float = 30.0
    tx_power_d2d_dbm: float = 15.0
    ul_rx_threshold_dbm: float = -70.0
    fading_shape_m: float | tuple[float, ...] = 1.0   # global, or one entry per contender
    pf_time_const: float = 1000.0
    slots_per_realization: int = 10000
    spatial_realizations: int = 1
    rng_seed: int = 12345
    rate_log_base: float = 2.0            # 2 or math.e
    interference_radius_m: float = 300.0
    policy: str = "bcs"
    cfs_d2d_random: bool = False
    resources: int = 1
    group_sizes: tuple[int, ...] | None = None   # fixed D2D grouping; None = greedy coloring

    def __post_init__(self):
        if self.K1 < 0 or self.K2 < 0 or self.K1 + 2 * self.K2 < 1:
            raise ConfigError("need K1 >= 0, K2 >= 0 and at least one user")
        if not (0 < self.d2d_min_m < self.d2d_max_m < self.cell_radius_m):
            raise ConfigError("need 0 < d2d_min_m < d2d_max_m < cell_radius_m")
        if self.pathloss_exp_cellular <= 0 or self.pathloss_exp_d2d <= 0:
            raise ConfigError("path-loss exponents must be positive")
        for m in self.shapes_per_contender():
            if m < 0.5:
                raise ConfigError("fading_shape_m must be >= 0.5")
        for key in ("noise_power_dbm", "tx_power_dl_dbm", "tx_power_d2d_dbm", "ul_rx_threshold_dbm"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(f"{key} must be finite")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.slots_per_realization < 1 or self.spatial_realizations < 1 or self.resources < 1:
            raise ConfigError("slot/realization/resource counts must be >= 1")
        if self.group_sizes is not None:
            if not self.group_sizes or any(s < 1 for s in self.group_sizes):
                raise ConfigError("group_sizes entries must be >= 1")
            if sum(self.group_sizes) != self.K2:
                raise ConfigError("group_sizes must sum to K2")
        if self.rate_log_base <= 1.0:
            raise ConfigError("rate_log_base must be > 1")

    # linear-scale views, converted once from dB/dBm
    @property
    def pathloss_const_cellular(self) -> float:
        return _db_to_linear(self.pathloss_const_cellular_db)

    @property
    def pathloss_const_d2d(self) -> float:
        return _db_to_linear(self.pathloss_const_d2d_db)

    @property
    def noise_power_mw(self) -> float:
        return _db_to_linear(self.noise_power_dbm)

    @property
    def tx_power_dl_mw(self) -> float:
        return _db_to_linear(self.tx_power_dl_dbm)

    @property
    def tx_power_d2d_mw(self) -> float:
        return _db_to_linear(self.tx_power_d2d_dbm)

    @property
    def ul_rx_threshold_mw(self) -> float:
        return _db_to_linear(self.ul_rx_threshold_dbm)

    @property
    def n_users(self) -> int:
        return self.K1 + 2 * self.K2

    @property
    def n_contenders(self) -> int:
        return self.K1 + self.K2

    def shapes_per_contender(self) -> np.ndarray:
        """Nakagami shape per contender (K1 cellular, then K2 pairs)."""
        m = self.fading_shape_m
        if isinstance(m, tuple):
            if len(m) != self.n_contenders:
                raise ConfigError("fading_shape_m list must have K1 + K2 entries")
            return np.asarray(m, dtype=float)
        return np.full(self.n_contenders, float(m))

    def override(self, **kwargs) -> "SystemConfig":
        return replace(self, **kwargs)

    def digest(self) -> str:
        parts = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)]
        return hashlib.sha256(";".join(parts).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SpatialRealization:
    """Sampled positions for one outer Monte Carlo iteration.

    Pair device positions are centroid +/- (D/2)(cos theta, sin theta);
    centroid angles are kept so pair-to-pair distances can be derived.
    """

    cellular_distances: np.ndarray      # (K1,) base-station distances
    pair_centroid_distances: np.ndarray  # (K2,)
    pair_centroid_angles: np.ndarray     # (K2,) angle of centroid seen from the BS
    pair_direct_distances: np.ndarray    # (K2,) device-to-device distance
    pair_angles: np.ndarray              # (K2,) orientation of the pair axis

    def centroid_xy(self) -> np.ndarray:
        """(K2, 2) Cartesian centroid positions."""
        return np.column_stack((
            self.pair_centroid_distances * np.cos(self.pair_centroid_angles),
            self.pair_centroid_distances * np.sin(self.pair_centroid_angles),
        ))

    def device_xy(self) -> np.ndarray:
        """(K2, 2, 2) positions of the two devices of each pair."""
        c = self.centroid_xy()
        half = 0.5 * self.pair_direct_distances
        offs = np.column_stack((half * np.cos(self.pair_angles), half * np.sin(self.pair_angles)))
        return np.stack((c + offs, c - offs), axis=1)


def sample_spatial(config: SystemConfig, rng: np.random.Generator) -> SpatialRealization:
    """Draw one spatial realization.

    Base-station distances follow the density 2d/R^2, sampled by inverse CDF
    d = R*sqrt(u); direct pair distances are uniform on [D_min, D_max]; all
    angles uniform on [0, 2pi).
    """
    R = config.cell_radius_m
    cell_d = R * np.sqrt(rng.random(config.K1))
    cen_d = R * np.sqrt(rng.random(config.K2))
    cen_a = rng.uniform(0.0, 2.0 * np.pi, config.K2)
    direct = rng.uniform(config.d2d_min_m, config.d2d_max_m, config.K2)
    ang = rng.uniform(0.0, 2.0 * np.pi, config.K2)
    return SpatialRealization(cell_d, cen_d, cen_a, direct, ang)


@dataclass(frozen=True)
class LinkGeometry:
    """One transmitter-receiver link under the power-law path-loss model."""

    kind: str                 # cellular-downlink | cellular-uplink | d2d-direct
    distance_m: float
    pathloss_const: float     # linear C
    pathloss_exp: float       # eta

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ConfigError("link distance must be positive")

    @property
    def path_gain(self) -> float:
        return self.pathloss_const * self.distance_m ** (-self.pathloss_exp)


def cellular_downlink(config: SystemConfig, distance_m: float) -> LinkGeometry:
    return LinkGeometry("cellular-downlink", distance_m,
                        config.pathloss_const_cellular, config.pathloss_exp_cellular)


def cellular_uplink(config: SystemConfig, distance_m: float) -> LinkGeometry:
    return LinkGeometry("cellular-uplink", distance_m,
                        config.pathloss_const_cellular, config.pathloss_exp_cellular)


def d2d_direct(config: SystemConfig, distance_m: float) -> LinkGeometry:
    return LinkGeometry("d2d-direct", distance_m,
                        config.pathloss_const_d2d, config.pathloss_exp_d2d)


@dataclass(frozen=True)
class FadingSpec:
    """Nakagami-m fading, expressed directly as a unit-mean Gamma power gain."""

    shape_m: float = 1.0
    mean_power: float = 1.0

    def __post_init__(self):
        if self.shape_m < 0.5:
            raise ConfigError("Nakagami shape must be >= 0.5")
        if self.mean_power <= 0:
            raise ConfigError("mean_power must be positive")


# ---------------------------------------------------------------------------
# flat key = value config files

def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if key == "group_sizes":
        if raw.lower() in ("", "none"):
            return None
        return tuple(int(tok) for tok in raw.split(","))
    if key == "fading_shape_m":
        if "," in raw:
            return tuple(float(tok) for tok in raw.split(","))
        return float(raw)
    if key == "rate_log_base":
        return math.e if raw.lower() == "e" else float(raw)
    try:
        if key in _INT_KEYS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def parse_config_text(text: str, overrides: dict[str, str] | None = None) -> SystemConfig:
    known = {f.name for f in fields(SystemConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (tok.strip() for tok in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in known:
            raise ConfigError(f"unknown override key {key!r}")
        values[key] = _parse_value(key, str(raw))
    return SystemConfig(**values)


def load_config(path, overrides: dict[str, str] | None = None) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides)
