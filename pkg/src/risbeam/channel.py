"""Random network geometry and channel generation.

Link model: direct BS-UE channels are Rayleigh; BS-RIS and RIS-UE channels
are Rician with line-of-sight components built from uniform-linear-array
steering vectors (half-wavelength spacing, arrays oriented along the y-axis
so broadside points down the +x axis).  Path loss follows
``beta(d) = beta0 * d**(-eps)`` and is folded into the per-entry mean power
of each fading draw.

Conventions:

- ``ChannelSet.h_direct[k]`` is the *row* channel of user k (the conjugated
  direct channel), so ``h_direct[k] @ w`` is the received amplitude.
- ``ChannelSet.h_bs_ris`` is the N x N_t BS-to-RIS matrix.
- ``ChannelSet.h_ris_ue[k]`` is the plain (unconjugated) RIS-to-user vector;
  formulas conjugate it explicitly where needed.

All powers are linear milliwatts, all distances meters.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Geometry",
    "PathLossModel",
    "FadingModel",
    "ChannelSet",
    "path_loss",
    "drop_users",
    "sample_rayleigh",
    "sample_rician",
    "ula_steering",
    "generate_channels",
]


@dataclass(frozen=True)
class Geometry:
    """Node placement for one drop: BS, RIS and K user positions (meters)."""

    bs_position: np.ndarray
    ris_position: np.ndarray
    ue_positions: np.ndarray  # (K, 2)

    def __post_init__(self):
        object.__setattr__(self, "bs_position", np.asarray(self.bs_position, float))
        object.__setattr__(self, "ris_position", np.asarray(self.ris_position, float))
        ue = np.atleast_2d(np.asarray(self.ue_positions, float))
        object.__setattr__(self, "ue_positions", ue)
        if ue.shape[0] < 1 or ue.shape[1] != 2:
            raise ValueError(f"ue_positions must be (K, 2) with K >= 1, got {ue.shape}")
        for arr in (self.bs_position, self.ris_position, ue):
            if not np.all(np.isfinite(arr)):
                raise ValueError("geometry coordinates must be finite")


@dataclass(frozen=True)
class PathLossModel:
    """Distance-dependent power gain beta(d) = beta0 * d**(-eps)."""

    beta0: float = 1e-3  # -30 dB reference gain at 1 m
    eps_direct: float = 3.2
    eps_bs_ris: float = 2.2
    eps_ris_ue: float = 2.5

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ValueError("beta0 must be positive")
        if min(self.eps_direct, self.eps_bs_ris, self.eps_ris_ue) <= 0:
            raise ValueError("path-loss exponents must be positive")


@dataclass(frozen=True)
class FadingModel:
    """Rician factors for the reflected links; direct links are Rayleigh."""

    rician_k_bs_ris: float = 100.0
    rician_k_ris_ue: float = 10.0

    def __post_init__(self):
        if self.rician_k_bs_ris < 0 or self.rician_k_ris_ue < 0:
            raise ValueError("Rician factors must be non-negative")


@dataclass(frozen=True)
class ChannelSet:
    """All channel matrices for one drop (see module docstring for conventions)."""

    h_direct: np.ndarray  # (K, N_t) row channels
    h_bs_ris: np.ndarray  # (N, N_t)
    h_ris_ue: np.ndarray  # (K, N)

    def __post_init__(self):
        for name in ("h_direct", "h_bs_ris", "h_ris_ue"):
            arr = np.asarray(getattr(self, name), complex)
            object.__setattr__(self, name, arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if self.h_direct.shape[1] != self.h_bs_ris.shape[1]:
            raise ValueError("h_direct and h_bs_ris disagree on antenna count")
        if self.h_ris_ue.shape[1] != self.h_bs_ris.shape[0]:
            raise ValueError("h_ris_ue and h_bs_ris disagree on RIS size")
        if self.h_direct.shape[0] != self.h_ris_ue.shape[0]:
            raise ValueError("h_direct and h_ris_ue disagree on user count")

    @property
    def n_users(self) -> int:
        return self.h_direct.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h_direct.shape[1]

    @property
    def n_ris(self) -> int:
        return self.h_bs_ris.shape[0]

    def fingerprint(self) -> str:
        """Stable hex digest of the full channel realization."""
        dig = hashlib.sha256()
        for arr in (self.h_direct, self.h_bs_ris, self.h_ris_ue):
            dig.update(str(arr.shape).encode())
            dig.update(np.ascontiguousarray(arr).tobytes())
        return dig.hexdigest()


def path_loss(model: PathLossModel, distance: float, exponent: float) -> float:
    """Linear power gain beta0 * distance**(-exponent)."""
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return model.beta0 * float(distance) ** (-exponent)


def drop_users(scenario, rng: np.random.Generator) -> Geometry:
    """Place the BS and RIS at their configured positions and drop K users
    i.i.d. uniform over the configured rectangle."""
    (x_lo, x_hi), (y_lo, y_hi) = scenario.ue_region
    ue = np.column_stack(
        [
            rng.uniform(x_lo, x_hi, scenario.n_users),
            rng.uniform(y_lo, y_hi, scenario.n_users),
        ]
    )
    return Geometry(
        bs_position=np.asarray(scenario.bs_position, float),
        ris_position=np.asarray(scenario.ris_position, float),
        ue_positions=ue,
    )


def sample_rayleigh(rows: int, cols: int, mean_power: float, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. circularly-symmetric complex Gaussian matrix with E|entry|^2 = mean_power."""
    if mean_power < 0:
        raise ValueError(f"mean_power must be non-negative, got {mean_power}")
    scale = np.sqrt(mean_power / 2.0)
    return scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


def sample_rician(
    rows: int,
    cols: int,
    k_factor: float,
    mean_power: float,
    los_component: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rician draw: deterministic LOS part plus Rayleigh scatter.

    The mixing weights sqrt(K/(K+1)) and sqrt(1/(K+1)) keep the per-entry
    mean power equal to ``mean_power`` as long as the LOS entries are
    unit-modulus.
    """
    if k_factor < 0:
        raise ValueError(f"k_factor must be non-negative, got {k_factor}")
    los = np.asarray(los_component, complex)
    if los.shape != (rows, cols):
        raise ValueError(f"los_component shape {los.shape} != ({rows}, {cols})")
    w_los = np.sqrt(k_factor / (k_factor + 1.0))
    w_nlos = np.sqrt(1.0 / (k_factor + 1.0))
    return w_los * np.sqrt(mean_power) * los + w_nlos * sample_rayleigh(rows, cols, mean_power, rng)


def ula_steering(n_elements: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA steering vector for a given link angle (radians)."""
    return np.exp(1j * np.pi * np.arange(n_elements) * np.sin(angle))


def _link_angle(src: np.ndarray, dst: np.ndarray) -> float:
    d = dst - src
    return float(np.arctan2(d[1], d[0]))


def generate_channels(scenario, geometry: Geometry, rng: np.random.Generator) -> ChannelSet:
    """Generate all channels for one drop.

    Uses three child streams of ``rng`` (direct, BS-RIS, RIS-UE), so
    consuming more draws from one block never shifts the others.
    """
    pl = scenario.path_loss
    fad = scenario.fading
    n_t, n, k_users = scenario.n_tx, scenario.n_ris, scenario.n_users
    bs, ris = geometry.bs_position, geometry.ris_position

    d_bs_ris = float(np.linalg.norm(ris - bs))
    d_bs_ue = np.linalg.norm(geometry.ue_positions - bs, axis=1)
    d_ris_ue = np.linalg.norm(geometry.ue_positions - ris, axis=1)
    if d_bs_ris <= 0 or np.any(d_bs_ue <= 0) or np.any(d_ris_ue <= 0):
        raise ValueError("a UE coincides with the BS or RIS (zero link distance)")

    rng_direct, rng_bs_ris, rng_ris_ue = rng.spawn(3)

    h_direct = np.empty((k_users, n_t), complex)
    for k in range(k_users):
        beta = path_loss(pl, d_bs_ue[k], pl.eps_direct)
        h_direct[k] = sample_rayleigh(1, n_t, beta, rng_direct)[0]

    los_h1 = np.outer(
        ula_steering(n, _link_angle(ris, bs)),
        np.conj(ula_steering(n_t, _link_angle(bs, ris))),
    )
    beta1 = path_loss(pl, d_bs_ris, pl.eps_bs_ris)
    h_bs_ris = sample_rician(n, n_t, fad.rician_k_bs_ris, beta1, los_h1, rng_bs_ris)

    h_ris_ue = np.empty((k_users, n), complex)
    for k in range(k_users):
        beta2 = path_loss(pl, d_ris_ue[k], pl.eps_ris_ue)
        los = ula_steering(n, _link_angle(ris, geometry.ue_positions[k]))[None, :]
        h_ris_ue[k] = sample_rician(1, n, fad.rician_k_ris_ue, beta2, los, rng_ris_ue)[0]

    return ChannelSet(h_direct=h_direct, h_bs_ris=h_bs_ris, h_ris_ue=h_ris_ue)
