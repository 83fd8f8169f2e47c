"""Real second-order cone programs and a dense interior-point solver.

A :class:`ConicProgram` maximizes a linear objective subject to affine maps
landing in nonnegative, second-order or rotated-second-order cones.  The
solver runs a homogeneous self-dual embedding with Nesterov-Todd scaling and
Mehrotra predictor-corrector steps, so infeasible and unbounded programs are
certified rather than guessed.  Problems are equilibrated (Ruiz, power-of-2
scales) before solving; all arithmetic is dense, which is ample for the
problem sizes this package generates (at most a few hundred rows).

Complex decision vectors enter through the lifting ``z -> [Re z; Im z]``;
:func:`lift_hermitian_quadratic` maps a Hermitian form to the real symmetric
matrix that reproduces it on lifted vectors.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

__all__ = [
    "NONNEG",
    "SOC",
    "RSOC",
    "ConicProgram",
    "SolveResult",
    "lift_complex",
    "lift_hermitian_quadratic",
    "inner_product_rows",
    "re_inner_row",
    "solve",
]

NONNEG = "nonnegative"
SOC = "second-order"
RSOC = "rotated-second-order"

_CONES = (NONNEG, SOC, RSOC)


# ---------------------------------------------------------------------------
# lifting helpers
# ---------------------------------------------------------------------------

def lift_complex(z: np.ndarray) -> np.ndarray:
    """Real lift [Re z; Im z] of a complex vector."""
    z = np.asarray(z, complex).ravel()
    return np.concatenate([z.real, z.imag])


def lift_hermitian_quadratic(q: np.ndarray) -> np.ndarray:
    """Real symmetric matrix Qhat with zhat^T Qhat zhat = z^H Q z for all z.

    Raises ValueError when Q is not Hermitian (tolerance 1e-10 relative).
    """
    q = np.asarray(q, complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {q.shape}")
    scale = np.linalg.norm(q)
    if np.linalg.norm(q - q.conj().T) > 1e-10 * max(scale, 1e-300):
        raise ValueError("matrix is not Hermitian")
    qr, qi = q.real, q.imag
    return np.block([[qr, -qi], [qi, qr]])


def inner_product_rows(v: np.ndarray) -> np.ndarray:
    """Rows (2, 2n) giving [Re; Im] of v^H x on the lifted vector [Re x; Im x]."""
    v = np.asarray(v, complex).ravel()
    return np.block([[v.real, v.imag], [-v.imag, v.real]])


def re_inner_row(v: np.ndarray) -> np.ndarray:
    """Row (2n,) giving Re{v^H x} on the lifted vector."""
    v = np.asarray(v, complex).ravel()
    return np.concatenate([v.real, v.imag])


# ---------------------------------------------------------------------------
# program container
# ---------------------------------------------------------------------------

@dataclass
class ConicProgram:
    """Linear maximization over an intersection of cone constraints.

    Each constraint is (A, b, cone) and requires ``A @ x + b`` to lie in the
    tagged cone.  Nonnegative blocks may have any dimension >= 1; second-order
    blocks need dimension >= 2 ([radius; vector]); rotated blocks dimension
    >= 3 ([u; v; vector] with 2uv >= ||vector||^2, u, v >= 0).
    """

    num_vars: int
    objective: np.ndarray = None
    constraints: list = field(default_factory=list)
    var_names: list = None

    def __post_init__(self):
        if self.objective is None:
            self.objective = np.zeros(self.num_vars)
        self.objective = np.asarray(self.objective, float).ravel()
        if self.objective.size != self.num_vars:
            raise ValueError("objective length must equal num_vars")

    def add(self, matrix, offset, cone: str) -> None:
        a = np.atleast_2d(np.asarray(matrix, float))
        b = np.atleast_1d(np.asarray(offset, float))
        if cone not in _CONES:
            raise ValueError(f"unknown cone tag {cone!r}")
        if a.shape[1] != self.num_vars:
            raise ValueError(f"constraint has {a.shape[1]} columns, program has {self.num_vars} variables")
        if a.shape[0] != b.size:
            raise ValueError("matrix row count and offset length differ")
        if cone == SOC and a.shape[0] < 2:
            raise ValueError("second-order blocks need dimension >= 2")
        if cone == RSOC and a.shape[0] < 3:
            raise ValueError("rotated blocks need dimension >= 3")
        self.constraints.append((a, b, cone))

    def add_nonneg(self, matrix, offset) -> None:
        self.add(matrix, offset, NONNEG)

    def add_soc(self, matrix, offset) -> None:
        self.add(matrix, offset, SOC)

    def add_rsoc(self, matrix, offset) -> None:
        self.add(matrix, offset, RSOC)

    def constraint_values(self, x: np.ndarray) -> list:
        """Per-block values A @ x + b, for diagnostics."""
        x = np.asarray(x, float).ravel()
        return [a @ x + b for a, b, _ in self.constraints]

    def violations(self, x: np.ndarray) -> np.ndarray:
        """Per-block cone violation (0 when satisfied)."""
        out = []
        for (a, b, cone), val in zip(self.constraints, self.constraint_values(x)):
            if cone == NONNEG:
                out.append(max(0.0, float(-val.min())))
            elif cone == SOC:
                out.append(max(0.0, float(np.linalg.norm(val[1:]) - val[0])))
            else:
                u, v, w = val[0], val[1], val[2:]
                out.append(max(0.0, -u, -v, float(w @ w - 2.0 * u * v)))
        return np.array(out)

    def dump(self) -> str:
        """One constraint per line, for external cross-checking."""
        names = self.var_names or [f"x{i}" for i in range(self.num_vars)]
        lines = [f"maximize {_lincomb(self.objective, names)}"]
        for a, b, cone in self.constraints:
            rows = "; ".join(_lincomb(a[i], names, b[i]) for i in range(a.shape[0]))
            lines.append(f"{cone}[{a.shape[0]}]: {rows}")
        return "\n".join(lines)


def _lincomb(coeffs, names, offset=0.0) -> str:
    terms = [f"{c:+.6g}*{n}" for c, n in zip(coeffs, names) if c != 0.0]
    if offset != 0.0 or not terms:
        terms.append(f"{offset:+.6g}")
    return " ".join(terms)


@dataclass
class SolveResult:
    """Solver outcome: status, primal point, objective and residual triple."""

    status: str
    primal: np.ndarray
    objective_value: float
    residuals: dict
    iterations: int


# ---------------------------------------------------------------------------
# cone algebra (orthant + second-order blocks)
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def _rsoc_to_soc(a: np.ndarray, b: np.ndarray):
    """(u, v, w) in RSOC  <=>  ((u+v)/sqrt2, (u-v)/sqrt2, w) in SOC."""
    a2, b2 = a.copy(), b.copy()
    a2[0] = (a[0] + a[1]) / _SQRT2
    a2[1] = (a[0] - a[1]) / _SQRT2
    b2[0] = (b[0] + b[1]) / _SQRT2
    b2[1] = (b[0] - b[1]) / _SQRT2
    return a2, b2


class _Cones:
    """Orthant of dimension p followed by second-order blocks."""

    def __init__(self, p: int, soc_dims: list):
        self.p = p
        self.soc_dims = list(soc_dims)
        self.dim = p + sum(soc_dims)
        self.degree = p + len(soc_dims)
        self.slices = []
        start = p
        for d in soc_dims:
            self.slices.append(slice(start, start + d))
            start += d

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[: self.p] = 1.0
        for sl in self.slices:
            e[sl.start] = 1.0
        return e

    def inside(self, v: np.ndarray, margin: float = 0.0) -> bool:
        if self.p and np.min(v[: self.p]) <= margin:
            return False
        for sl in self.slices:
            blk = v[sl]
            if blk[0] - np.linalg.norm(blk[1:]) <= margin:
                return False
        return True

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        """Largest step keeping v + alpha * dv in the cone (may be inf)."""
        alpha = np.inf
        if self.p:
            neg = dv[: self.p] < 0
            if neg.any():
                alpha = min(alpha, np.min(-v[: self.p][neg] / dv[: self.p][neg]))
        for sl in self.slices:
            alpha = min(alpha, _soc_max_step(v[sl], dv[sl]))
        return alpha


def _soc_max_step(v: np.ndarray, dv: np.ndarray) -> float:
    # smallest positive root of (v + a*dv)^T J (v + a*dv) = 0, guarded by the
    # first coordinate staying nonnegative; stable quadratic roots (the
    # naive formula cancels catastrophically when dv grazes the boundary)
    v0, v1 = v[0], v[1:]
    d0, d1 = dv[0], dv[1:]
    a = d0 * d0 - d1 @ d1
    b = 2.0 * (v0 * d0 - v1 @ d1)
    c = v0 * v0 - v1 @ v1
    best = np.inf
    disc = b * b - 4.0 * a * c
    if a == 0.0:
        if b < 0.0:
            best = -c / b
    elif disc >= 0.0:
        sq = np.sqrt(disc)
        qq = -0.5 * (b + np.copysign(sq, b)) if b != 0.0 else -0.5 * sq
        roots = [qq / a]
        if qq != 0.0:
            roots.append(c / qq)
        for root in roots:
            if root > 0.0:
                best = min(best, root)
    if d0 < 0:
        best = min(best, -v0 / d0)
    return best


class _Scaling:
    """Nesterov-Todd scaling point for the full cone product."""

    def __init__(self, cones: _Cones, s: np.ndarray, z: np.ndarray):
        self.cones = cones
        p = cones.p
        self.w_orth = np.sqrt(s[:p] / z[:p]) if p else np.zeros(0)
        self.soc = []
        for sl in cones.slices:
            sb, zb = s[sl], z[sl]
            res_s = sb[0] ** 2 - sb[1:] @ sb[1:]
            res_z = zb[0] ** 2 - zb[1:] @ zb[1:]
            sbar = sb / np.sqrt(res_s)
            zbar = zb / np.sqrt(res_z)
            gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
            wbar = (sbar + np.concatenate([[zbar[0]], -zbar[1:]])) / (2.0 * gamma)
            eta = (res_s / res_z) ** 0.25
            self.soc.append((eta, wbar))
        self.lam = self.mul_w(z)

    def _wbar_mul(self, wbar, v, sign):
        # W_bar v with sign=+1, (J W_bar J) v = W_bar^{-1} v with sign=-1
        w0, w1 = wbar[0], wbar[1:]
        t = w1 @ v[1:]
        head = w0 * v[0] + sign * t
        tail = sign * v[0] * w1 + v[1:] + (t / (1.0 + w0)) * w1
        return np.concatenate([[head], tail])

    def mul_w(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        p = self.cones.p
        out[:p] = self.w_orth * v[:p]
        for (eta, wbar), sl in zip(self.soc, self.cones.slices):
            out[sl] = eta * self._wbar_mul(wbar, v[sl], +1.0)
        return out

    def mul_w_inv(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        p = self.cones.p
        out[:p] = v[:p] / self.w_orth
        for (eta, wbar), sl in zip(self.soc, self.cones.slices):
            out[sl] = self._wbar_mul(wbar, v[sl], -1.0) / eta
        return out

    def mul_w_inv_matrix(self, mat: np.ndarray) -> np.ndarray:
        """W^{-1} @ mat for a dense (m, n) matrix."""
        out = np.empty_like(mat)
        p = self.cones.p
        out[:p] = mat[:p] / self.w_orth[:, None]
        for (eta, wbar), sl in zip(self.soc, self.cones.slices):
            w0, w1 = wbar[0], wbar[1:]
            blk = mat[sl]
            t = w1 @ blk[1:]
            out[sl.start] = (w0 * blk[0] - t) / eta
            out[sl.start + 1 : sl.stop] = (
                -np.outer(w1, blk[0]) + blk[1:] + np.outer(w1, t / (1.0 + w0))
            ) / eta
        return out

    def w_squared(self) -> np.ndarray:
        """Dense W^2 (block diagonal) for the KKT system."""
        m = self.cones.dim
        w2 = np.zeros((m, m))
        p = self.cones.p
        if p:
            w2[np.arange(p), np.arange(p)] = self.w_orth**2
        for (eta, wbar), sl in zip(self.soc, self.cones.slices):
            d = sl.stop - sl.start
            jmat = -np.eye(d)
            jmat[0, 0] = 1.0
            w2[sl, sl] = eta**2 * (2.0 * np.outer(wbar, wbar) - jmat)
        return w2

    def jordan_mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        p = self.cones.p
        out[:p] = u[:p] * v[:p]
        for sl in self.cones.slices:
            ub, vb = u[sl], v[sl]
            out[sl.start] = ub @ vb
            out[sl.start + 1 : sl.stop] = ub[0] * vb[1:] + vb[0] * ub[1:]
        return out

    def lambda_solve(self, d: np.ndarray) -> np.ndarray:
        """Solve Arw(lambda) u = d."""
        out = np.empty_like(d)
        p = self.cones.p
        out[:p] = d[:p] / self.lam[:p]
        for sl in self.cones.slices:
            lb, db = self.lam[sl], d[sl]
            l0, l1 = lb[0], lb[1:]
            det = l0 * l0 - l1 @ l1
            u0 = (l0 * db[0] - l1 @ db[1:]) / det
            out[sl.start] = u0
            out[sl.start + 1 : sl.stop] = (db[1:] - u0 * l1) / l0
        return out


# ---------------------------------------------------------------------------
# equilibration
# ---------------------------------------------------------------------------

def _pow2(x: np.ndarray) -> np.ndarray:
    # nearest power of two to sqrt(x), guarded against zeros
    x = np.where(x <= 0, 1.0, x)
    return np.exp2(np.round(0.5 * np.log2(x)))


def _equilibrate(g: np.ndarray, h: np.ndarray, cones: _Cones, passes: int = 3):
    """Ruiz equilibration with block-uniform row scales (cone preserving)."""
    m, n = g.shape
    e = np.ones(m)
    d = np.ones(n)
    for _ in range(passes):
        gs = np.abs(g) * e[:, None] * d[None, :]
        row_max = np.maximum(gs.max(axis=1), np.abs(h) * e)
        if cones.p:
            e[: cones.p] /= _pow2(row_max[: cones.p])
        for sl in cones.slices:
            e[sl] /= _pow2(np.array([row_max[sl].max()]))[0]
        gs = np.abs(g) * e[:, None] * d[None, :]
        d /= _pow2(gs.max(axis=0))
    return e, d


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def _assemble(program: ConicProgram):
    """Standard form min c^T x, G x + s = h, s in (orthant x SOC blocks)."""
    nonneg_a, nonneg_b, soc_blocks = [], [], []
    for a, b, cone in program.constraints:
        if cone == NONNEG:
            nonneg_a.append(a)
            nonneg_b.append(b)
        elif cone == SOC:
            soc_blocks.append((a, b))
        else:
            soc_blocks.append(_rsoc_to_soc(a, b))
    rows_a = ([np.vstack(nonneg_a)] if nonneg_a else []) + [a for a, _ in soc_blocks]
    rows_b = ([np.concatenate(nonneg_b)] if nonneg_b else []) + [b for _, b in soc_blocks]
    amat = np.vstack(rows_a)
    boff = np.concatenate(rows_b)
    p = sum(a.shape[0] for a in nonneg_a)
    cones = _Cones(p, [a.shape[0] for a, _ in soc_blocks])
    # A x + b in K  <=>  s = h - G x in K with G = -A, h = b
    return -amat, boff, cones


def solve(program: ConicProgram, tolerance: float = 1e-8, max_iterations: int = 200) -> SolveResult:
    """Solve the program; status is one of optimal / infeasible / unbounded /
    iteration-limit.  Deterministic for identical inputs."""
    if not program.constraints:
        raise ValueError("program has no constraints")
    g0, h0, cones = _assemble(program)
    c0 = -program.objective  # internal minimization
    n = program.num_vars
    m = cones.dim

    e_row, d_col = _equilibrate(g0, h0, cones)
    g = g0 * e_row[:, None] * d_col[None, :]
    h = h0 * e_row
    c = c0 * d_col
    rho_c = 1.0 / max(1.0, np.abs(c).max()) if c.size else 1.0
    rho_h = 1.0 / max(1.0, np.abs(h).max()) if h.size else 1.0
    c = c * rho_c
    h = h * rho_h

    norm_h0 = 1.0 + np.linalg.norm(h0)
    norm_c0 = 1.0 + np.linalg.norm(c0)

    def unscale_x(y, tau):
        return d_col * y / (rho_h * tau)

    x = np.zeros(n)
    s = cones.identity()
    z = cones.identity()
    tau, kappa = 1.0, 1.0

    best = None  # (quality, x, pres, dres, relgap)
    status = "iteration-limit"
    iters_used = max_iterations
    delta_reg = 1e-11
    stall = 0

    for it in range(max_iterations):
        iters_used = it
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(z)) and np.isfinite(tau) and np.isfinite(kappa)):
            break

        # residuals of the embedding
        rx = g.T @ z + c * tau
        rz = g @ x + s - h * tau
        rt = c @ x + h @ z + kappa
        mu = (s @ z + tau * kappa) / (cones.degree + 1)

        # original-space candidate and termination tests
        x_orig = unscale_x(x, tau)
        s_orig = (s / e_row) / (rho_h * tau)
        z_orig = (e_row * z) / (rho_c * tau)
        pres = np.linalg.norm(g0 @ x_orig + s_orig - h0) / norm_h0
        dres = np.linalg.norm(g0.T @ z_orig + c0) / norm_c0
        pcost = c0 @ x_orig
        absgap = s_orig @ z_orig
        relgap = absgap / max(1.0, abs(pcost))
        quality = max(pres, dres, relgap)
        if best is None or quality < best[0]:
            best = (quality, x_orig, pres, dres, relgap)
            stall = 0
        else:
            stall += 1

        if pres <= tolerance and dres <= tolerance and relgap <= tolerance:
            status = "optimal"
            break

        # infeasibility certificates (tau -> 0 side)
        z_ray = (e_row * z) / rho_c
        x_ray = d_col * x / rho_h
        s_ray = (s / e_row) / rho_h
        hz = h0 @ z_ray
        cx = c0 @ x_ray
        if hz < 0 and np.linalg.norm(g0.T @ z_ray) <= tolerance * norm_c0 * (-hz):
            status = "infeasible"
            break
        if cx < 0 and np.linalg.norm(g0 @ x_ray + s_ray) <= tolerance * norm_h0 * (-cx):
            status = "unbounded"
            break

        if stall >= 10:
            break  # numerical floor reached; report the best iterate

        # NT-scaled KKT system: substituting dz_s = W dz gives a unit (2,2)
        # block, which halves the conditioning exponent near convergence
        scl = _Scaling(cones, s, z)
        gw = scl.mul_w_inv_matrix(g)  # W^{-1} G
        kkt = np.zeros((n + m, n + m))
        kkt[:n, n:] = gw.T
        kkt[n:, :n] = gw
        kkt[n:, n:] = -np.eye(m)
        kkt_reg = kkt.copy()
        kkt_reg[np.arange(n), np.arange(n)] += delta_reg
        kkt_reg[np.arange(n, n + m), np.arange(n, n + m)] -= delta_reg
        lu = lu_factor(kkt_reg, check_finite=False)

        def kkt_solve(rhs):
            sol = lu_solve(lu, rhs, check_finite=False)
            for _ in range(2):
                sol += lu_solve(lu, rhs - kkt @ sol, check_finite=False)
            return sol

        sol2 = kkt_solve(np.concatenate([-c, scl.mul_w_inv(h)]))
        p2, q2s = sol2[:n], sol2[n:]
        q2 = scl.mul_w_inv(q2s)
        denom_tau = c @ p2 + h @ q2 - kappa / tau

        def direction(ds_target, dtk_target, res_scale):
            u = scl.lambda_solve(ds_target)
            sol1 = kkt_solve(np.concatenate([-res_scale * rx, scl.mul_w_inv(-res_scale * rz) - u]))
            p1, q1s = sol1[:n], sol1[n:]
            q1 = scl.mul_w_inv(q1s)
            dtau = (-res_scale * rt - c @ p1 - h @ q1 - dtk_target / tau) / denom_tau
            dx = p1 + dtau * p2
            dzs = q1s + dtau * q2s
            dz = q1 + dtau * q2
            ds = scl.mul_w(u - dzs)
            dkappa = (dtk_target - kappa * dtau) / tau
            return dx, dz, ds, dtau, dkappa

        # predictor
        lam_sq = scl.jordan_mul(scl.lam, scl.lam)
        dxa, dza, dsa, dta, dka = direction(-lam_sq, -tau * kappa, 1.0)
        alpha_a = min(1.0, _full_step(cones, s, z, tau, kappa, dsa, dza, dta, dka))
        mu_aff = (
            (s + alpha_a * dsa) @ (z + alpha_a * dza)
            + (tau + alpha_a * dta) * (kappa + alpha_a * dka)
        ) / (cones.degree + 1)
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # corrector
        corr = scl.jordan_mul(scl.mul_w_inv(dsa), scl.mul_w(dza))
        ds_target = sigma * mu * cones.identity() - lam_sq - corr
        dtk_target = sigma * mu - tau * kappa - dta * dka
        dx, dz, ds, dtau, dkappa = direction(ds_target, dtk_target, 1.0 - sigma)

        alpha = min(1.0, 0.99 * _full_step(cones, s, z, tau, kappa, ds, dz, dtau, dkappa))
        if not np.isfinite(alpha) or alpha < 1e-13:
            break
        # rounding insurance: back off until strictly interior
        for _ in range(40):
            if (
                cones.inside(s + alpha * ds)
                and cones.inside(z + alpha * dz)
                and tau + alpha * dtau > 0
                and kappa + alpha * dkappa > 0
            ):
                break
            alpha *= 0.5
        x = x + alpha * dx
        z = z + alpha * dz
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

    _, x_best, pres, dres, relgap = best
    if status in ("infeasible", "unbounded"):
        objective_value = np.nan
    else:
        objective_value = float(program.objective @ x_best)
    return SolveResult(
        status=status,
        primal=x_best,
        objective_value=objective_value,
        residuals={"primal": float(pres), "dual": float(dres), "gap": float(relgap)},
        iterations=iters_used if status != "iteration-limit" else max_iterations,
    )


def _full_step(cones, s, z, tau, kappa, ds, dz, dtau, dkappa) -> float:
    alpha = min(cones.max_step(s, ds), cones.max_step(z, dz))
    if dtau < 0:
        alpha = min(alpha, -tau / dtau)
    if dkappa < 0:
        alpha = min(alpha, -kappa / dkappa)
    return alpha
