"""Successive convex approximation for the max-min rate design.

The nonconvex joint problem is split into a transmit-beamforming block and a
RIS-coefficient block.  Each block is convexified around the current iterate
with two tangent majorants:

- quadratic-over-linear: -x^H M x / g  <=  (x0^H M x0 / g0^2) g
                                            - 2 Re{x0^H M x} / g0
- squared norm:          -||x||^2      <=  ||x0||^2 - 2 Re{x0^H x}

and the per-user rate constraint ``log(1 + g_k) >= tau`` is eliminated by
monotonicity: both subproblems maximize an epigraph variable ``t`` under
``g_k >= t`` and report ``tau = log(1 + t*)``.  Each subproblem is then a
pure SOCP handled by :mod:`risbeam.socp`.

Slack expansion points are re-derived from the current iterate before every
build (they hold the defining equalities exactly), which keeps the expansion
point feasible after the other block has moved and makes every accepted
iteration monotone in the true minimum rate.
"""

import logging
from dataclasses import dataclass

import numpy as np

from risbeam import socp
from risbeam.channel import ChannelSet
from risbeam.socp import ConicProgram, inner_product_rows, re_inner_row
from risbeam.system_model import (
    Beamformer,
    RisQuadraticData,
    RisPowerData,
    RisVector,
    Scenario,
    amplified_noise,
    effective_channels,
    ris_power_data,
    sinr_from_quadratic,
    sinr_quadratic_data,
    user_rate,
)

__all__ = [
    "SubproblemInfeasible",
    "ScaOptions",
    "ScaState",
    "BeamformingSubproblemData",
    "QolSurrogate",
    "QuaSurrogate",
    "f_qol",
    "f_qua",
    "qol_surrogate",
    "qua_surrogate",
    "beamforming_subproblem_data",
    "build_beamforming_subproblem",
    "build_ris_subproblem",
    "initialize",
    "bca_solve",
    "BcaResult",
    "IterationRecord",
    "constraint_violations",
    "sinr_numerator",
]

log = logging.getLogger(__name__)

_GAMMA_FLOOR = 1e-12  # expansion denominators are clamped here, never lower


class SubproblemInfeasible(RuntimeError):
    """The current iterate violates a subproblem constraint at build time."""


# ---------------------------------------------------------------------------
# surrogates
# ---------------------------------------------------------------------------


def f_qol(quad_value: float, gamma: float) -> float:
    """Exact quadratic-over-linear term -quad_value / gamma."""
    return -quad_value / gamma


def f_qua(x: np.ndarray) -> float:
    """Exact concave term -||x||^2."""
    x = np.asarray(x)
    return -float(np.real(np.vdot(x, x)))


@dataclass(frozen=True)
class QolSurrogate:
    """Affine majorant of -x^H M x / gamma, tight at the expansion point.

    ``gamma_coef`` multiplies gamma; ``x_coef`` enters as -Re{x_coef^H x}.
    """

    gamma_coef: float
    x_coef: np.ndarray
    gamma0: float
    quad0: float

    def __call__(self, x, gamma: float) -> float:
        return self.gamma_coef * gamma - float(np.real(np.vdot(self.x_coef, np.asarray(x))))


def qol_surrogate(m_times_x0, quad0: float, gamma0: float) -> QolSurrogate:
    """Surrogate from the expansion point: pass M x0 and x0^H M x0."""
    if gamma0 <= 0:
        raise ValueError(f"expansion gamma must be positive, got {gamma0}")
    m_times_x0 = np.asarray(m_times_x0)
    return QolSurrogate(
        gamma_coef=quad0 / gamma0**2,
        x_coef=2.0 * m_times_x0 / gamma0,
        gamma0=gamma0,
        quad0=quad0,
    )


@dataclass(frozen=True)
class QuaSurrogate:
    """Affine majorant ||x0||^2 - 2 Re{x0^H x} of -||x||^2, tight at x0."""

    x0: np.ndarray
    const: float

    def __call__(self, x) -> float:
        return self.const - 2.0 * float(np.real(np.vdot(self.x0, np.asarray(x))))


def qua_surrogate(x0) -> QuaSurrogate:
    x0 = np.asarray(x0)
    return QuaSurrogate(x0=x0, const=float(np.real(np.vdot(x0, x0))))


# ---------------------------------------------------------------------------
# state and options
# ---------------------------------------------------------------------------


@dataclass
class ScaOptions:
    convergence_tol: float = 1e-3
    max_outer_iterations: int = 50
    solver_tolerance: float = 1e-8
    solver_max_iterations: int = 200
    # a subproblem iterate whose reported residuals meet this weaker bound is
    # still used when the solver stops at its numerical floor; joint-problem
    # feasibility is asserted downstream at 1e-6 regardless
    solver_accept_tolerance: float = 1e-7
    # restarts > 1 adds runs from random feasible starting points (the first
    # run always uses the standard initialization) and keeps the best final
    # objective; the alternating ascent is only locally optimal and the
    # standard start can funnel every phase draw into a single basin
    restarts: int = 1
    blocks: str = "both"  # both | beamforming | ris
    init_beamformer_channel: str = "effective"  # effective | direct
    init_alpha: str = "random"  # random | zero

    def __post_init__(self):
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.blocks not in ("both", "beamforming", "ris"):
            raise ValueError(f"unknown blocks selector {self.blocks!r}")
        if self.init_beamformer_channel not in ("effective", "direct"):
            raise ValueError("init_beamformer_channel must be 'effective' or 'direct'")
        if self.init_alpha not in ("random", "zero"):
            raise ValueError("init_alpha must be 'random' or 'zero'")


@dataclass
class ScaState:
    """Current iterates and slack values of the alternating loop."""

    w: np.ndarray           # (K, N_t)
    alpha: np.ndarray       # (N,)
    gamma: np.ndarray       # (K,) beamforming slacks
    n_tilde: np.ndarray     # (K,) RIS numerator slacks
    gamma_tilde: np.ndarray  # (K,) RIS SINR slacks
    tau: float
    iteration: int = 0


@dataclass(frozen=True)
class BeamformingSubproblemData:
    """Fixed data of the beamforming block at the current RIS coefficients.

    ``h_hat[k]`` carries the desired-signal quadratic form on the stacked
    beamformer (block k only), ``h_bar[k]`` the interference form (all other
    blocks); their sum is block-diagonal in H_k = h_k h_k^H.
    """

    h_eff: np.ndarray       # (K, N_t) effective row channels
    h_hat: np.ndarray       # (K, K*N_t, K*N_t)
    h_bar: np.ndarray       # (K, K*N_t, K*N_t)
    sigma_k_sq: np.ndarray  # (K,)


def beamforming_subproblem_data(channels: ChannelSet, alpha, scenario: Scenario) -> BeamformingSubproblemData:
    eff = effective_channels(channels, alpha)
    k_users, n_t = eff.shape
    dim = k_users * n_t
    h_hat = np.zeros((k_users, dim, dim), complex)
    h_bar = np.zeros((k_users, dim, dim), complex)
    for k in range(k_users):
        h_col = np.conj(eff[k])
        h_tilde = np.outer(h_col, eff[k])  # h_k h_k^H
        for j in range(k_users):
            blk = slice(j * n_t, (j + 1) * n_t)
            if j == k:
                h_hat[k][blk, blk] = h_tilde
            else:
                h_bar[k][blk, blk] = h_tilde
    sigma_k_sq = amplified_noise(channels, alpha, scenario) + scenario.sigma_u_sq
    return BeamformingSubproblemData(h_eff=eff, h_hat=h_hat, h_bar=h_bar, sigma_k_sq=sigma_k_sq)


# ---------------------------------------------------------------------------
# variable layouts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _BeamLayout:
    n_users: int
    n_tx: int

    @property
    def num_vars(self) -> int:
        return 1 + 2 * self.n_users * self.n_tx + self.n_users

    @property
    def w_slice(self) -> slice:
        return slice(1, 1 + 2 * self.n_users * self.n_tx)

    @property
    def gamma_slice(self) -> slice:
        d = 2 * self.n_users * self.n_tx
        return slice(1 + d, 1 + d + self.n_users)

    def extract_w(self, primal: np.ndarray) -> np.ndarray:
        d = self.n_users * self.n_tx
        flat = primal[self.w_slice]
        return (flat[:d] + 1j * flat[d:]).reshape(self.n_users, self.n_tx)

    def extract_gamma(self, primal: np.ndarray) -> np.ndarray:
        return primal[self.gamma_slice].copy()


@dataclass(frozen=True)
class _RisLayout:
    n_ris: int
    n_users: int
    n_scale: object = 1.0  # per-user scale of the numerator slack variables

    @property
    def num_vars(self) -> int:
        return 1 + 2 * self.n_ris + 2 * self.n_users

    @property
    def alpha_slice(self) -> slice:
        return slice(1, 1 + 2 * self.n_ris)

    @property
    def n_tilde_slice(self) -> slice:
        return slice(1 + 2 * self.n_ris, 1 + 2 * self.n_ris + self.n_users)

    @property
    def gamma_tilde_slice(self) -> slice:
        base = 1 + 2 * self.n_ris + self.n_users
        return slice(base, base + self.n_users)

    def extract_alpha(self, primal: np.ndarray) -> np.ndarray:
        flat = primal[self.alpha_slice]
        return flat[: self.n_ris] + 1j * flat[self.n_ris :]

    def extract_n_tilde(self, primal: np.ndarray) -> np.ndarray:
        return primal[self.n_tilde_slice] * self.n_scale


# ---------------------------------------------------------------------------
# subproblem builders
# ---------------------------------------------------------------------------


def build_beamforming_subproblem(
    state: ScaState,
    channels: ChannelSet,
    scenario: Scenario,
    data: BeamformingSubproblemData,
):
    """Conic program over (t, stacked w, gamma) for fixed RIS coefficients."""
    k_users, n_t = data.h_eff.shape
    lay = _BeamLayout(n_users=k_users, n_tx=n_t)
    nv = lay.num_vars
    obj = np.zeros(nv)
    obj[0] = 1.0
    prog = ConicProgram(num_vars=nv, objective=obj)

    gamma0 = np.maximum(state.gamma, _GAMMA_FLOOR)

    # gamma_k >= t and gamma_k >= 0
    a = np.zeros((2 * k_users, nv))
    for k in range(k_users):
        a[k, lay.gamma_slice.start + k] = 1.0
        a[k, 0] = -1.0
        a[k_users + k, lay.gamma_slice.start + k] = 1.0
    prog.add_nonneg(a, np.zeros(2 * k_users))

    # per-user SINR surrogate constraint, normalized by the expansion-point
    # denominator so every cone block is O(1) regardless of link budgets
    amp0 = data.h_eff @ state.w.T  # amp0[k, j] = h_k^H w0_j
    for k in range(k_users):
        h_bar0_kk = amp0[k, k]
        den0 = float(
            np.sum(np.abs(amp0[k]) ** 2) - np.abs(h_bar0_kk) ** 2 + data.sigma_k_sq[k]
        )
        scale = 1.0 / den0
        mx0 = np.zeros(k_users * n_t, complex)
        mx0[k * n_t : (k + 1) * n_t] = np.conj(data.h_eff[k]) * h_bar0_kk
        sur = qol_surrogate(mx0, float(np.abs(h_bar0_kk) ** 2), float(gamma0[k]))

        u_row = np.zeros(nv)
        u_row[lay.w_slice] = scale * re_inner_row(sur.x_coef)
        u_row[lay.gamma_slice.start + k] = -scale * sur.gamma_coef
        u_off = -float(data.sigma_k_sq[k]) * scale

        if k_users == 1:
            prog.add_nonneg(u_row[None, :], [u_off])
            continue
        rows = np.zeros((2 + 2 * (k_users - 1), nv))
        offs = np.zeros(2 + 2 * (k_users - 1))
        rows[0] = u_row
        offs[0] = u_off
        offs[1] = 0.5
        r = 2
        for j in range(k_users):
            if j == k:
                continue
            v = np.zeros(k_users * n_t, complex)
            v[j * n_t : (j + 1) * n_t] = np.sqrt(scale) * np.conj(data.h_eff[k])
            rows[r : r + 2, lay.w_slice] = inner_product_rows(v)
            r += 2
        prog.add_rsoc(rows, offs)

    # BS power ball
    a = np.zeros((1 + 2 * k_users * n_t, nv))
    a[1:, lay.w_slice] = np.eye(2 * k_users * n_t)
    b = np.zeros(1 + 2 * k_users * n_t)
    b[0] = np.sqrt(scenario.p_bs_max)
    prog.add_soc(a, b)

    # RIS forwarded-power ball (coefficients fixed at the current alpha)
    mask = scenario.active_mask
    if mask.any():
        amp_sq = np.abs(state.alpha[mask]) ** 2
        c0 = scenario.sigma_r_sq * float(amp_sq.sum())
        cw = float(amp_sq @ np.sum(np.abs(channels.h_bs_ris[mask]) ** 2, axis=1))
        slack = scenario.p_ris_max - c0
        if cw > 0.0:
            if slack < 0.0:
                raise SubproblemInfeasible(
                    f"current RIS coefficients already exceed the RIS budget by {-slack:.3e} mW"
                )
            a = np.zeros((1 + 2 * k_users * n_t, nv))
            a[1:, lay.w_slice] = np.eye(2 * k_users * n_t)
            b = np.zeros(1 + 2 * k_users * n_t)
            b[0] = np.sqrt(slack / cw)
            prog.add_soc(a, b)
        elif slack < -1e-12 * max(1.0, scenario.p_ris_max):
            raise SubproblemInfeasible("RIS noise forwarding alone exceeds the RIS budget")

    return prog, lay


def build_ris_subproblem(
    state: ScaState,
    channels: ChannelSet,
    scenario: Scenario,
    data: RisQuadraticData,
    power: RisPowerData,
):
    """Conic program over (t, alpha, n_tilde, gamma_tilde) for a fixed beamformer."""
    k_users = channels.n_users
    n = channels.n_ris
    alpha0 = state.alpha
    gamma0 = np.maximum(state.gamma_tilde, _GAMMA_FLOOR)
    n0 = state.n_tilde
    mask = scenario.active_mask
    sigma_r = np.sqrt(scenario.sigma_r_sq)

    # per-user normalization: each denominator constraint is divided by its
    # expansion-point denominator and each numerator constraint by the
    # squared slack scale, so all cone blocks are O(1) at the expansion
    # point regardless of link budgets; n_tilde variables are expressed in
    # units of their expansion values
    den0 = np.einsum("i,kij,j->k", np.conj(alpha0), data.q_tilde, alpha0).real
    den0 += 2.0 * (np.conj(alpha0) @ data.t_tilde.T).real + data.e_tilde
    n_scale = np.maximum(n0, np.sqrt(den0) * 1e-8)
    lay = _RisLayout(n_ris=n, n_users=k_users, n_scale=n_scale)
    nv = lay.num_vars
    obj = np.zeros(nv)
    obj[0] = 1.0
    prog = ConicProgram(num_vars=nv, objective=obj)

    # gamma_tilde_k >= t, gamma_tilde_k >= 0, n_tilde_k >= 0
    a = np.zeros((3 * k_users, nv))
    for k in range(k_users):
        a[k, lay.gamma_tilde_slice.start + k] = 1.0
        a[k, 0] = -1.0
        a[k_users + k, lay.gamma_tilde_slice.start + k] = 1.0
        a[2 * k_users + k, lay.n_tilde_slice.start + k] = 1.0
    prog.add_nonneg(a, np.zeros(3 * k_users))

    active_idx = np.flatnonzero(mask)
    for k in range(k_users):
        # denominator <= surrogate of n_tilde^2 / gamma_tilde
        sur = qol_surrogate(np.array([n0[k]]), float(n0[k] ** 2), float(gamma0[k]))
        sc_a = 1.0 / den0[k]
        u_row = np.zeros(nv)
        u_row[lay.n_tilde_slice.start + k] = float(np.real(sur.x_coef[0])) * n_scale[k] * sc_a
        u_row[lay.gamma_tilde_slice.start + k] = -sur.gamma_coef * sc_a
        u_off = -scenario.sigma_u_sq * sc_a

        n_x = 2 * (k_users - 1) + 2 * len(active_idx)
        if n_x == 0:
            prog.add_nonneg(u_row[None, :], [u_off])
        else:
            rows = np.zeros((2 + n_x, nv))
            offs = np.zeros(2 + n_x)
            rows[0] = u_row
            offs[0] = u_off
            offs[1] = 0.5
            root_a = np.sqrt(sc_a)
            r = 2
            for j in range(k_users):
                if j == k:
                    continue
                rows[r : r + 2, lay.alpha_slice] = inner_product_rows(
                    root_a * np.conj(data.h_tilde12[k, j])
                )
                offs[r] = data.h_bar0[k, j].real * root_a
                offs[r + 1] = data.h_bar0[k, j].imag * root_a
                r += 2
            for nidx in active_idx:
                gain = root_a * sigma_r * np.abs(channels.h_ris_ue[k, nidx])
                rows[r, lay.alpha_slice.start + nidx] = gain
                rows[r + 1, lay.alpha_slice.start + n + nidx] = gain
                r += 2
            prog.add_rsoc(rows, offs)

        # n_tilde^2 <= linearized numerator
        sc_b = 1.0 / n_scale[k] ** 2
        qsur = qua_surrogate(data.q_bar[k] @ alpha0)
        lin = data.q_mat[k] @ alpha0 + data.t_vec[k]
        rows = np.zeros((3, nv))
        offs = np.zeros(3)
        rows[0, lay.alpha_slice] = 2.0 * sc_b * re_inner_row(lin)
        offs[0] = (float(data.e_scalar[k]) - qsur.const) * sc_b
        offs[1] = 0.5
        rows[2, lay.n_tilde_slice.start + k] = 1.0
        prog.add_rsoc(rows, offs)

    # RIS transmit-power ball over active coefficients
    if len(active_idx):
        xi = power.xi[active_idx]
        rows = np.zeros((1 + 2 * len(active_idx), nv))
        offs = np.zeros(1 + 2 * len(active_idx))
        offs[0] = np.sqrt(scenario.p_ris_max)
        for i, nidx in enumerate(active_idx):
            rows[1 + 2 * i, lay.alpha_slice.start + nidx] = np.sqrt(xi[i])
            rows[2 + 2 * i, lay.alpha_slice.start + n + nidx] = np.sqrt(xi[i])
        prog.add_soc(rows, offs)

    # per-element modulus bounds
    for nidx in range(n):
        rows = np.zeros((3, nv))
        rows[1, lay.alpha_slice.start + nidx] = 1.0
        rows[2, lay.alpha_slice.start + n + nidx] = 1.0
        bound = scenario.a_max if mask[nidx] else 1.0
        prog.add_soc(rows, [bound, 0.0, 0.0])

    return prog, lay


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------


def _current_sinr(channels: ChannelSet, w: np.ndarray, alpha: np.ndarray, scenario: Scenario):
    eff = effective_channels(channels, alpha)
    amp = eff @ w.T
    powers = np.abs(amp) ** 2
    signal = np.diag(powers).copy()
    noise = amplified_noise(channels, alpha, scenario) + scenario.sigma_u_sq
    sinr = signal / (powers.sum(axis=1) - signal + noise)
    return sinr, signal


def _state_from_point(scenario: Scenario, channels: ChannelSet, w: np.ndarray, alpha: np.ndarray) -> ScaState:
    """State at a given point with slack values holding their equalities."""
    sinr, signal = _current_sinr(channels, w, alpha, scenario)
    return ScaState(
        w=w,
        alpha=alpha,
        gamma=sinr.copy(),
        n_tilde=np.sqrt(signal),
        gamma_tilde=sinr.copy(),
        tau=float(np.log1p(sinr.min())),
        iteration=0,
    )


def initialize(
    scenario: Scenario,
    channels: ChannelSet,
    rng: np.random.Generator,
    options: ScaOptions = None,
) -> ScaState:
    """Feasible starting point: conjugate beamforming with equal power and
    random RIS phases at a budget-feasible common amplitude; slack values
    hold their defining equalities."""
    options = options or ScaOptions()
    k_users, n = scenario.n_users, scenario.n_ris

    if options.init_alpha == "zero" or n == 0:
        alpha0 = np.zeros(n, complex)
    else:
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        radius = min(1.0, scenario.a_max)
        mask = scenario.active_mask
        if mask.any():
            # xi depends on the beamformer only through its total power,
            # which equal-power conjugate beamforming pins at the full budget
            row_gain = np.sum(np.abs(channels.h_bs_ris[mask]) ** 2, axis=1)
            xi_sum = float(np.sum(scenario.sigma_r_sq + row_gain * scenario.p_bs_max))
            if xi_sum > 0:
                radius = min(radius, np.sqrt(scenario.p_ris_max / xi_sum))
        alpha0 = (radius * (1.0 - 1e-3)) * np.exp(1j * theta)

    if options.init_beamformer_channel == "direct":
        rows = channels.h_direct
    else:
        rows = effective_channels(channels, alpha0)
    w0 = np.zeros((k_users, scenario.n_tx), complex)
    per_user = scenario.p_bs_max / k_users
    for k in range(k_users):
        norm = np.linalg.norm(rows[k])
        if norm > 0:
            w0[k] = np.sqrt(per_user) * np.conj(rows[k]) / norm

    return _state_from_point(scenario, channels, w0, alpha0)


def _random_feasible_state(
    scenario: Scenario,
    channels: ChannelSet,
    rng: np.random.Generator,
    options: ScaOptions,
) -> ScaState:
    """Restart point: random full-power beamformer direction and random
    per-element coefficients, scaled back inside the RIS power budget."""
    k_users, n = scenario.n_users, scenario.n_ris
    w = rng.standard_normal((k_users, scenario.n_tx)) + 1j * rng.standard_normal((k_users, scenario.n_tx))
    total = float(np.sum(np.abs(w) ** 2))
    w *= np.sqrt(scenario.p_bs_max / total) if total > 0 else 0.0

    if options.init_alpha == "zero" or n == 0:
        alpha = np.zeros(n, complex)
    else:
        alpha = rng.uniform(0.0, 1.0, n) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
        mask = scenario.active_mask
        if mask.any():
            xi = ris_power_data(channels, w, scenario).xi[mask]
            bound = np.minimum(scenario.a_max, np.sqrt(scenario.p_ris_max / np.maximum(xi, 1e-300)))
            alpha[mask] *= bound * rng.uniform(0.0, 1.0, int(mask.sum()))
            used = float(np.sum(np.abs(alpha[mask]) ** 2 * xi))
            if used > scenario.p_ris_max:
                alpha[mask] *= np.sqrt(scenario.p_ris_max / used) * (1.0 - 1e-9)

    return _state_from_point(scenario, channels, w, alpha)


# ---------------------------------------------------------------------------
# feasibility bookkeeping
# ---------------------------------------------------------------------------


def constraint_violations(channels: ChannelSet, w, alpha, scenario: Scenario) -> dict:
    """Violations of the joint-problem constraints (0 when satisfied)."""
    wm = w.w if isinstance(w, Beamformer) else np.atleast_2d(np.asarray(w, complex))
    av = alpha.alpha if isinstance(alpha, RisVector) else np.asarray(alpha, complex).ravel()
    mask = scenario.active_mask
    mod = np.abs(av)
    xi = ris_power_data(channels, wm, scenario).xi
    return {
        "bs_power": max(0.0, float(np.sum(np.abs(wm) ** 2) - scenario.p_bs_max)),
        "ris_power": max(0.0, float(np.sum(mod**2 * xi) - scenario.p_ris_max)),
        "passive_modulus": max(0.0, float((mod[~mask] - 1.0).max()) if (~mask).any() else 0.0),
        "active_modulus": max(0.0, float((mod[mask] - scenario.a_max).max()) if mask.any() else 0.0),
    }


# ---------------------------------------------------------------------------
# alternating loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    tau: float
    rates: tuple
    max_violation: float


@dataclass
class BcaResult:
    w: Beamformer
    alpha: RisVector
    trace: list
    tau: float
    rates: np.ndarray
    iterations: int
    converged: bool
    failure: str = None

    @property
    def tau_trace(self) -> np.ndarray:
        return np.array([rec.tau for rec in self.trace])


def bca_solve(
    scenario: Scenario,
    channels: ChannelSet,
    options: ScaOptions = None,
    rng: np.random.Generator = None,
) -> BcaResult:
    """Alternate the two convex subproblems until the objective settles.

    The trace records the true minimum rate after every outer iteration; it
    is non-decreasing up to solver slack.  On a subproblem failure the last
    feasible iterate is returned with ``failure`` set.  With restarts > 1
    the best run (by final objective) is returned.
    """
    options = options or ScaOptions()
    rng = rng if rng is not None else np.random.default_rng(0)

    if options.restarts == 1:
        return _bca_run(scenario, channels, options, initialize(scenario, channels, rng, options))
    best = None
    for r, child in enumerate(rng.spawn(options.restarts)):
        if r == 0:
            state = initialize(scenario, channels, child, options)
        else:
            state = _random_feasible_state(scenario, channels, child, options)
        result = _bca_run(scenario, channels, options, state)
        if best is None or result.tau > best.tau:
            best = result
    return best


def _bca_run(
    scenario: Scenario,
    channels: ChannelSet,
    options: ScaOptions,
    state: ScaState,
) -> BcaResult:

    def record(it):
        rates = user_rate(channels, state.w, state.alpha, scenario)
        viol = max(constraint_violations(channels, state.w, state.alpha, scenario).values())
        return rates, IterationRecord(it, float(rates.min()), tuple(rates), viol)

    if scenario.p_bs_max <= 0.0:
        state.w = np.zeros_like(state.w)
        rates, rec = record(0)
        return BcaResult(
            w=Beamformer(state.w),
            alpha=RisVector(state.alpha, scenario.active_mask),
            trace=[rec],
            tau=0.0,
            rates=rates,
            iterations=0,
            converged=True,
        )

    rates, rec = record(0)
    trace = [rec]
    tau_prev = rec.tau
    converged = False
    failure = None
    iterations = 0

    def usable(res):
        if res.status == "optimal":
            return True
        return res.status == "iteration-limit" and max(res.residuals.values()) <= options.solver_accept_tolerance

    for it in range(1, options.max_outer_iterations + 1):
        iterations = it
        try:
            if options.blocks in ("both", "beamforming"):
                sinr, _ = _current_sinr(channels, state.w, state.alpha, scenario)
                state.gamma = np.maximum(sinr, _GAMMA_FLOOR)
                data = beamforming_subproblem_data(channels, state.alpha, scenario)
                prog, lay = build_beamforming_subproblem(state, channels, scenario, data)
                res = socp.solve(prog, options.solver_tolerance, options.solver_max_iterations)
                if not usable(res):
                    failure = f"beamforming subproblem at outer iteration {it}: {res.status}"
                    break
                state.w = lay.extract_w(res.primal)
                state.gamma = lay.extract_gamma(res.primal)

            if options.blocks in ("both", "ris") and scenario.n_ris > 0:
                qdata = sinr_quadratic_data(channels, state.w, scenario)
                pdata = ris_power_data(channels, state.w, scenario)
                sinr = sinr_from_quadratic(qdata, state.alpha)
                num = sinr_numerator(qdata, state.alpha)
                state.gamma_tilde = np.maximum(sinr, _GAMMA_FLOOR)
                state.n_tilde = np.sqrt(np.maximum(num, 0.0))
                prog, lay = build_ris_subproblem(state, channels, scenario, qdata, pdata)
                res = socp.solve(prog, options.solver_tolerance, options.solver_max_iterations)
                if not usable(res):
                    failure = f"RIS subproblem at outer iteration {it}: {res.status}"
                    break
                state.alpha = lay.extract_alpha(res.primal)
                state.n_tilde = lay.extract_n_tilde(res.primal)
                state.gamma_tilde = res.primal[lay.gamma_tilde_slice].copy()
        except SubproblemInfeasible as exc:
            failure = f"outer iteration {it}: {exc}"
            break

        rates, rec = record(it)
        trace.append(rec)
        state.tau = rec.tau
        state.iteration = it
        if abs(rec.tau - tau_prev) / max(tau_prev, _GAMMA_FLOOR) < options.convergence_tol:
            converged = True
            break
        tau_prev = rec.tau

    if failure is not None:
        log.warning("bca_solve stopped early: %s", failure)
        _, final_rec = record(iterations)
    else:
        final_rec = trace[-1]

    return BcaResult(
        w=Beamformer(state.w),
        alpha=RisVector(state.alpha, scenario.active_mask),
        trace=trace,
        tau=final_rec.tau,
        rates=np.asarray(final_rec.rates),
        iterations=len(trace) - 1,
        converged=converged,
        failure=failure,
    )


def sinr_numerator(data: RisQuadraticData, alpha) -> np.ndarray:
    """Per-user numerator of the quadratic-form SINR."""
    a = alpha.alpha if isinstance(alpha, RisVector) else np.asarray(alpha, complex).ravel()
    num = np.einsum("i,kij,j->k", np.conj(a), data.q_mat, a).real
    num += 2.0 * (np.conj(a) @ data.t_vec.T).real + data.e_scalar
    return num
