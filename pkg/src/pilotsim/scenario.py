"""Cell geometry, user population and activity sampling.

A scenario fixes everything deterministic about the radio environment:
UE positions drawn area-uniformly over an annulus around the base
station, per-sector incident angles, and the angle-of-arrival interval
of each UE/sector link. All downstream channel statistics derive from
these quantities.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
import yaml

SQRT3 = math.sqrt(3.0)


class ConfigurationError(ValueError):
    """A system or experiment parameter violates its constraints."""


@dataclass(frozen=True)
class SystemConfig:
    """All scalar parameters of the simulated cell.

    Angles (`sigma_theta_deg`, `theta_3db_deg`) are configured in degrees
    and exposed in radians through properties. Powers are linear.
    """

    N: int = 128                    # connected UEs
    K: int = 16                     # active UEs per transmission interval
    S: int = 3                      # sectors / ULAs at the BS
    M: int = 16                     # antenna elements per ULA
    L: int = 50                     # propagation paths per UE-sector link
    delta_r: float = 0.5            # antenna spacing in wavelengths
    sigma_theta_deg: float = 15.0   # angular standard deviation
    wavelength: float = 0.15        # carrier wavelength [m]
    cell_radius: float = 500.0      # [m]
    min_radius: float = 10.0        # UE exclusion disc around the BS [m]
    p_u: float = 1.0                # transmit symbol power (linear)
    noise_power: float = 1.0        # per-antenna noise power (linear)
    tau: int = 16                   # pilot length [symbols]
    coherence_len: int = 200        # coherence block length Tc [symbols]
    g_a_max_db: float = 0.0         # max antenna gain [dB]
    a_max_db: float = 30.0          # max attenuation [dB]
    theta_3db_deg: float = 65.0     # half-power beamwidth
    chart_dim: int = 2              # chart dimension C
    chart_neighbors: int = 15       # kNN count used by the chart embedding
    seed: int = 0                   # master RNG seed
    position_feature: str = "cartesian"   # "cartesian" | "azimuth"
    quadrature_points: int = 512    # nodes for analytic covariance integrals
    constellation: str = "qpsk"     # data constellation: "qpsk" | "bpsk"

    @property
    def sigma_theta(self) -> float:
        """Angular standard deviation in radians."""
        return math.radians(self.sigma_theta_deg)

    @property
    def theta_3db(self) -> float:
        """Half-power beamwidth in radians."""
        return math.radians(self.theta_3db_deg)

    @property
    def antennas_total(self) -> int:
        """Compound array size M*S."""
        return self.M * self.S

    @property
    def snr_db(self) -> float:
        """Transmit SNR p_u / noise_power in dB."""
        return 10.0 * math.log10(self.p_u / self.noise_power)

    def validate(self) -> None:
        """Raise ConfigurationError naming the first offending field."""
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if not 1 <= self.K <= self.N:
            raise ConfigurationError("K must satisfy 1 <= K <= N")
        if self.S < 1:
            raise ConfigurationError("S must be >= 1")
        if self.M < 1:
            raise ConfigurationError("M must be >= 1")
        if self.L < 1:
            raise ConfigurationError("L must be >= 1")
        if not 1 <= self.tau <= self.coherence_len:
            raise ConfigurationError("tau must satisfy 1 <= tau <= coherence_len")
        if self.delta_r <= 0:
            raise ConfigurationError("delta_r must be > 0")
        if self.sigma_theta_deg < 0:
            raise ConfigurationError("sigma_theta_deg must be >= 0")
        if self.wavelength <= 0:
            raise ConfigurationError("wavelength must be > 0")
        if self.p_u <= 0:
            raise ConfigurationError("p_u must be > 0")
        if self.noise_power < 0:
            raise ConfigurationError("noise_power must be >= 0")
        if self.min_radius <= 0 or self.min_radius >= self.cell_radius:
            raise ConfigurationError("min_radius must satisfy 0 < min_radius < cell_radius")
        if self.theta_3db_deg <= 0:
            raise ConfigurationError("theta_3db_deg must be > 0")
        if self.a_max_db < 0:
            raise ConfigurationError("a_max_db must be >= 0")
        if self.chart_dim < 1 or self.chart_dim > self.N - 2:
            raise ConfigurationError("chart_dim must satisfy 1 <= chart_dim <= N - 2")
        if not 1 <= self.chart_neighbors < self.N:
            raise ConfigurationError("chart_neighbors must satisfy 1 <= chart_neighbors < N")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        if self.position_feature not in ("cartesian", "azimuth"):
            raise ConfigurationError("position_feature must be 'cartesian' or 'azimuth'")
        if self.quadrature_points < 2:
            raise ConfigurationError("quadrature_points must be >= 2")
        if self.constellation not in ("qpsk", "bpsk"):
            raise ConfigurationError("constellation must be 'qpsk' or 'bpsk'")

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(values: dict) -> SystemConfig:
    """Build a validated SystemConfig, rejecting unknown keys."""
    types = {f.name: f.type for f in fields(SystemConfig)}
    unknown = sorted(set(values) - set(types))
    if unknown:
        raise ConfigurationError(f"unknown system config key(s): {', '.join(unknown)}")
    coerced = {}
    for key, value in values.items():
        try:
            if types[key] == "int":
                coerced[key] = int(value)
            elif types[key] == "float":
                # YAML 1.1 reads exponents without a sign as strings.
                coerced[key] = float(value)
            else:
                coerced[key] = str(value)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid value for {key}: {value!r}") from exc
    cfg = SystemConfig(**coerced)
    cfg.validate()
    return cfg


def load_system_config(path) -> SystemConfig:
    """Read the `system:` section of a YAML config file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "system" not in doc:
        raise ConfigurationError(f"{path}: missing top-level 'system' section")
    return config_from_dict(doc["system"])


def sector_orientations(n_sectors: int) -> np.ndarray:
    """Boresight directions evenly partitioning [0, 2pi)."""
    return 2.0 * np.pi * np.arange(n_sectors) / n_sectors


@dataclass(frozen=True)
class UserRecord:
    """Geometry of one UE: position, BS distance and per-sector angles."""

    index: int
    position: np.ndarray        # (2,) Cartesian [m]
    distance: float             # BS distance [m]
    boresight_angles: np.ndarray  # (S,) incident angle per sector, in [0, 2pi)
    aoa_low: np.ndarray         # (S,) lower AoA interval edge [rad]
    aoa_high: np.ndarray        # (S,) upper AoA interval edge [rad]


@dataclass(frozen=True)
class Scenario:
    """Immutable cell snapshot: geometry of all N UEs plus the sector layout.

    Per-UE data is stored as arrays; `user(n)` materialises a UserRecord
    view for single-UE operations.
    """

    config: SystemConfig
    sector_orient: np.ndarray   # (S,)
    positions: np.ndarray       # (N, 2)
    distances: np.ndarray       # (N,)
    boresight: np.ndarray       # (N, S)
    aoa_low: np.ndarray         # (N, S)
    aoa_high: np.ndarray        # (N, S)

    @property
    def n_users(self) -> int:
        return self.positions.shape[0]

    def user(self, n: int) -> UserRecord:
        return UserRecord(
            index=n,
            position=self.positions[n],
            distance=float(self.distances[n]),
            boresight_angles=self.boresight[n],
            aoa_low=self.aoa_low[n],
            aoa_high=self.aoa_high[n],
        )

    @property
    def users(self) -> list[UserRecord]:
        return [self.user(n) for n in range(self.n_users)]

    def equals(self, other: "Scenario") -> bool:
        """Bitwise equality of all stored arrays and the config."""
        return (
            self.config == other.config
            and np.array_equal(self.sector_orient, other.sector_orient)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.distances, other.distances)
            and np.array_equal(self.boresight, other.boresight)
            and np.array_equal(self.aoa_low, other.aoa_low)
            and np.array_equal(self.aoa_high, other.aoa_high)
        )


@dataclass(frozen=True)
class ActiveSet:
    """Indices of the K UEs transmitting in the current interval."""

    indices: np.ndarray  # (K,) sorted, distinct, in [0, N)

    def __len__(self) -> int:
        return self.indices.size


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def build_scenario(config: SystemConfig, rng=None) -> Scenario:
    """Draw N UE positions area-uniformly over the cell annulus.

    The incident angle of a UE is its azimuth in the global frame (the S
    co-located arrays see the same arrival direction; sectors differ
    through the antenna pattern applied relative to each boresight). The
    AoA interval of every UE/sector link is the incident angle plus/minus
    sqrt(3) times the angular standard deviation.

    Parameters
    ----------
    config : SystemConfig
        Validated before any sampling; violations raise ConfigurationError.
    rng : np.random.Generator | int | None
        Seeded stream; defaults to a fresh stream from ``config.seed``.
    """
    config.validate()
    rng = _as_rng(config.seed if rng is None else rng)

    n = config.N
    r0, r1 = config.min_radius, config.cell_radius
    # Area-uniform radius over the annulus: F(r) = (r^2 - r0^2) / (r1^2 - r0^2).
    radii = np.sqrt(rng.uniform(0.0, 1.0, n) * (r1**2 - r0**2) + r0**2)
    azimuth = rng.uniform(0.0, 2.0 * np.pi, n)
    positions = np.column_stack((radii * np.cos(azimuth), radii * np.sin(azimuth)))

    orient = sector_orientations(config.S)
    incident = np.mod(np.arctan2(positions[:, 1], positions[:, 0]), 2.0 * np.pi)
    boresight = np.repeat(incident[:, None], config.S, axis=1)
    spread = SQRT3 * config.sigma_theta
    return Scenario(
        config=config,
        sector_orient=orient,
        positions=positions,
        distances=radii,
        boresight=boresight,
        aoa_low=boresight - spread,
        aoa_high=boresight + spread,
    )


def sample_active_set(scenario: Scenario, rng=None) -> ActiveSet:
    """Uniformly random K-subset of the N UEs, without replacement."""
    cfg = scenario.config
    if cfg.K > scenario.n_users:
        raise ConfigurationError("K must satisfy 1 <= K <= N")
    rng = _as_rng(cfg.seed if rng is None else rng)
    idx = rng.choice(scenario.n_users, size=cfg.K, replace=False)
    return ActiveSet(indices=np.sort(idx))
