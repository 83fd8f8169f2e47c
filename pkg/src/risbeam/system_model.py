"""Scenario constants and the physical quantities of the downlink model.

Rates are natural-log (nats/s/Hz).  Powers are linear milliwatts throughout,
so dBm-denominated parameters convert as ``10**(dbm / 10)``.
"""

from dataclasses import dataclass, field

import numpy as np

from risbeam.channel import ChannelSet, FadingModel, PathLossModel

__all__ = [
    "Scenario",
    "RisVector",
    "Beamformer",
    "RisQuadraticData",
    "RisPowerData",
    "dbm_to_mw",
    "mw_to_dbm",
    "paper_scenario",
    "desk_scenario",
    "effective_channel",
    "effective_channels",
    "amplified_noise",
    "user_rate",
    "ris_transmit_power",
    "ris_power_data",
    "sinr_quadratic_data",
    "sinr_from_quadratic",
    "min_rate",
]


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class Scenario:
    """All system constants: dimensions, budgets, noise, geometry and fading.

    ``active_set`` holds the (0-based) indices of RIS elements that can
    amplify; ``a_max`` is their maximum amplitude (linear, amplitude domain).
    ``sigma_r_sq`` defaults to ``(eta + 1) * sigma_u_sq``.
    """

    n_tx: int
    n_users: int
    n_ris: int
    active_set: tuple = ()
    a_max: float = 100.0
    p_bs_max: float = 100.0   # mW
    p_ris_max: float = 1.0    # mW
    sigma_u_sq: float = 1e-8  # mW
    eta: float = 10.0 ** 0.1
    sigma_r_sq: float = None
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    fading: FadingModel = field(default_factory=FadingModel)
    bs_position: tuple = (0.0, 0.0)
    ris_position: tuple = (20.0, 0.0)
    ue_region: tuple = ((0.0, 200.0), (-100.0, 100.0))

    def __post_init__(self):
        object.__setattr__(self, "active_set", tuple(int(i) for i in self.active_set))
        if self.n_tx < 1 or self.n_users < 1 or self.n_ris < 0:
            raise ValueError("dimensions must satisfy n_tx >= 1, n_users >= 1, n_ris >= 0")
        if len(set(self.active_set)) != len(self.active_set):
            raise ValueError("active_set contains duplicate indices")
        if self.active_set and not all(0 <= i < self.n_ris for i in self.active_set):
            raise ValueError("active_set indices must lie in [0, n_ris)")
        if self.a_max < 1:
            raise ValueError("a_max must be >= 1")
        if self.p_bs_max < 0 or self.p_ris_max < 0:
            raise ValueError("power budgets must be non-negative")
        if self.sigma_u_sq <= 0:
            raise ValueError("sigma_u_sq must be positive")
        if self.sigma_r_sq is None:
            object.__setattr__(self, "sigma_r_sq", (self.eta + 1.0) * self.sigma_u_sq)
        if self.sigma_r_sq < 0:
            raise ValueError("sigma_r_sq must be non-negative")

    @property
    def n_active(self) -> int:
        return len(self.active_set)

    @property
    def active_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_ris, bool)
        if self.active_set:
            mask[list(self.active_set)] = True
        return mask


def paper_scenario(
    n_tx: int = 2,
    n_users: int = 5,
    n_ris: int = 50,
    n_active: int = 4,
    p_bs_max_dbm: float = 20.0,
    p_ris_max_dbm: float = 0.0,
    a_max_db: float = 40.0,
    sigma_u_sq_dbm: float = -80.0,
    eta_db: float = 1.0,
    **overrides,
) -> Scenario:
    """Scenario with the reference simulation constants.

    ``a_max_db`` is a power gain; the amplitude bound is ``10**(a_max_db/20)``.
    Active elements occupy the first ``n_active`` RIS indices.  Keyword
    overrides in Scenario's native (linear) units win over the dB-derived
    defaults.
    """
    params = dict(
        n_tx=n_tx,
        n_users=n_users,
        n_ris=n_ris,
        active_set=tuple(range(n_active)),
        a_max=10.0 ** (a_max_db / 20.0),
        p_bs_max=dbm_to_mw(p_bs_max_dbm),
        p_ris_max=dbm_to_mw(p_ris_max_dbm),
        sigma_u_sq=dbm_to_mw(sigma_u_sq_dbm),
        eta=10.0 ** (eta_db / 10.0),
    )
    params.update(overrides)
    return Scenario(**params)


def desk_scenario(n_ris: int = 16, n_users: int = 3, n_active: int = 2, **kwargs) -> Scenario:
    """Small-scale variant of :func:`paper_scenario` for fast runs."""
    return paper_scenario(n_ris=n_ris, n_users=n_users, n_active=n_active, **kwargs)


@dataclass(frozen=True)
class RisVector:
    """RIS coefficient vector alpha with the active-element mask."""

    alpha: np.ndarray
    active_mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, complex).ravel())
        object.__setattr__(self, "active_mask", np.asarray(self.active_mask, bool).ravel())
        if self.alpha.shape != self.active_mask.shape:
            raise ValueError("alpha and active_mask must have the same length")

    @classmethod
    def zeros(cls, scenario: Scenario) -> "RisVector":
        return cls(np.zeros(scenario.n_ris, complex), scenario.active_mask)

    def modulus_slack(self, a_max: float) -> float:
        """Most negative slack of the per-element modulus constraints
        (negative values are violations)."""
        mod = np.abs(self.alpha)
        bound = np.where(self.active_mask, a_max, 1.0)
        return float(np.min(bound - mod)) if mod.size else 0.0


@dataclass(frozen=True)
class Beamformer:
    """Per-user transmit vectors, shape (K, N_t), in sqrt-mW amplitude units."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.atleast_2d(np.asarray(self.w, complex)))

    @property
    def stacked(self) -> np.ndarray:
        """Length K*N_t view used by the beamforming subproblem."""
        return self.w.ravel()

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


def _alpha_of(alpha) -> np.ndarray:
    return alpha.alpha if isinstance(alpha, RisVector) else np.asarray(alpha, complex).ravel()


def _w_of(w) -> np.ndarray:
    return w.w if isinstance(w, Beamformer) else np.atleast_2d(np.asarray(w, complex))


def effective_channel(channels: ChannelSet, alpha, user: int) -> np.ndarray:
    """Row channel of one user: direct link plus the RIS-cascaded link."""
    a = _alpha_of(alpha)
    return channels.h_direct[user] + (np.conj(channels.h_ris_ue[user]) * a) @ channels.h_bs_ris


def effective_channels(channels: ChannelSet, alpha) -> np.ndarray:
    """Row channels of all users, shape (K, N_t)."""
    a = _alpha_of(alpha)
    return channels.h_direct + (np.conj(channels.h_ris_ue) * a[None, :]) @ channels.h_bs_ris


def amplified_noise(channels: ChannelSet, alpha, scenario: Scenario) -> np.ndarray:
    """Per-user noise power forwarded by active elements,
    sigma_r^2 * sum_{n active} |alpha_n|^2 |h_ris_ue[k, n]|^2."""
    a = _alpha_of(alpha)
    mask = scenario.active_mask
    if not mask.any():
        return np.zeros(channels.n_users)
    gains = np.abs(a[mask]) ** 2 * scenario.sigma_r_sq
    return (np.abs(channels.h_ris_ue[:, mask]) ** 2) @ gains


def user_rate(channels: ChannelSet, w, alpha, scenario: Scenario) -> np.ndarray:
    """Achievable rate of every user in nats/s/Hz."""
    wm = _w_of(w)
    eff = effective_channels(channels, alpha)
    amp = eff @ wm.T  # amp[k, j] = h_k^H w_j
    powers = np.abs(amp) ** 2
    signal = np.diag(powers).copy()
    interference = powers.sum(axis=1) - signal
    noise = amplified_noise(channels, alpha, scenario) + scenario.sigma_u_sq
    return np.log1p(signal / (interference + noise))


def min_rate(rates: np.ndarray) -> float:
    """Smallest entry of a per-user rate vector."""
    rates = np.asarray(rates, float)
    if rates.size < 1:
        raise ValueError("need at least one user rate")
    return float(rates.min())


@dataclass(frozen=True)
class RisPowerData:
    """Per-element forwarded-power coefficients xi_n (zero off the active set)."""

    xi: np.ndarray

    @property
    def xi_matrix(self) -> np.ndarray:
        return np.diag(self.xi)


def ris_power_data(channels: ChannelSet, w, scenario: Scenario) -> RisPowerData:
    """xi_n = sigma_r^2 + ||row n of the BS-RIS matrix||^2 * total BS power
    for active n, zero otherwise."""
    wm = _w_of(w)
    total = float(np.sum(np.abs(wm) ** 2))
    xi = np.zeros(channels.n_ris)
    mask = scenario.active_mask
    if mask.any():
        row_gain = np.sum(np.abs(channels.h_bs_ris[mask]) ** 2, axis=1)
        xi[mask] = scenario.sigma_r_sq + row_gain * total
    return RisPowerData(xi=xi)


def ris_transmit_power(channels: ChannelSet, w, alpha, scenario: Scenario) -> float:
    """Closed-form RIS transmit power sum_{n active} |alpha_n|^2 xi_n (mW)."""
    a = _alpha_of(alpha)
    xi = ris_power_data(channels, w, scenario).xi
    return float(np.sum(np.abs(a) ** 2 * xi))


@dataclass(frozen=True)
class RisQuadraticData:
    """Per-user quadratic-form data exposing the RIS vector in the SINR.

    For every user k and any coefficient vector alpha:

    - numerator   = alpha^H Q_k alpha + 2 Re{alpha^H t_k} + e_k
    - denominator = alpha^H Qtilde_k alpha + 2 Re{alpha^H ttilde_k} + etilde_k

    ``q_bar[k]`` is a square root of the rank-1 matrix ``q_mat[k]``.
    Intermediates: ``h_bar0[k, j] = h_direct[k] @ w_j``,
    ``h_bar1[j] = h_bs_ris @ w_j`` and
    ``h_tilde12[k, j] = conj(h_ris_ue[k]) * h_bar1[j]``.
    """

    q_mat: np.ndarray      # (K, N, N)
    t_vec: np.ndarray      # (K, N)
    e_scalar: np.ndarray   # (K,)
    q_tilde: np.ndarray    # (K, N, N)
    t_tilde: np.ndarray    # (K, N)
    e_tilde: np.ndarray    # (K,)
    q_bar: np.ndarray      # (K, N, N)
    h_bar0: np.ndarray     # (K, K)
    h_bar1: np.ndarray     # (K, N)
    h_tilde12: np.ndarray  # (K, K, N)


def sinr_quadratic_data(channels: ChannelSet, w, scenario: Scenario) -> RisQuadraticData:
    """Build the quadratic-form SINR data for a fixed beamformer."""
    wm = _w_of(w)
    k_users, n = channels.n_users, channels.n_ris

    h_bar0 = channels.h_direct @ wm.T          # (K, K)
    h_bar1 = wm @ channels.h_bs_ris.T          # (K, N), row j = H1 w_j
    h2_conj = np.conj(channels.h_ris_ue)       # (K, N)
    h_tilde12 = h2_conj[:, None, :] * h_bar1[None, :, :]  # (K, K, N)

    q_mat = np.empty((k_users, n, n), complex)
    q_bar = np.empty((k_users, n, n), complex)
    t_vec = np.empty((k_users, n), complex)
    e_scalar = np.empty(k_users)
    q_tilde = np.empty((k_users, n, n), complex)
    t_tilde = np.empty((k_users, n), complex)
    e_tilde = np.empty(k_users)

    active_diag = scenario.active_mask.astype(float)
    for k in range(k_users):
        u = h_tilde12[k, k]
        v = np.conj(u)
        q_mat[k] = np.outer(v, u)
        norm_v = np.linalg.norm(v)
        q_bar[k] = np.outer(v, u) / norm_v if norm_v > 0 else np.zeros((n, n))
        t_vec[k] = v * h_bar0[k, k]
        e_scalar[k] = np.abs(h_bar0[k, k]) ** 2

        qt = scenario.sigma_r_sq * np.diag(active_diag * np.abs(channels.h_ris_ue[k]) ** 2)
        tt = np.zeros(n, complex)
        et = scenario.sigma_u_sq
        for j in range(k_users):
            if j == k:
                continue
            uj = h_tilde12[k, j]
            qt = qt + np.outer(np.conj(uj), uj)
            tt = tt + np.conj(uj) * h_bar0[k, j]
            et += np.abs(h_bar0[k, j]) ** 2
        q_tilde[k] = qt
        t_tilde[k] = tt
        e_tilde[k] = et

    return RisQuadraticData(
        q_mat=q_mat,
        t_vec=t_vec,
        e_scalar=e_scalar,
        q_tilde=q_tilde,
        t_tilde=t_tilde,
        e_tilde=e_tilde,
        q_bar=q_bar,
        h_bar0=h_bar0,
        h_bar1=h_bar1,
        h_tilde12=h_tilde12,
    )


def sinr_from_quadratic(data: RisQuadraticData, alpha) -> np.ndarray:
    """Per-user SINR evaluated through the quadratic forms."""
    a = _alpha_of(alpha)
    num = np.einsum("i,kij,j->k", np.conj(a), data.q_mat, a).real
    num += 2.0 * (np.conj(a) @ data.t_vec.T).real + data.e_scalar
    den = np.einsum("i,kij,j->k", np.conj(a), data.q_tilde, a).real
    den += 2.0 * (np.conj(a) @ data.t_tilde.T).real + data.e_tilde
    return num / den
