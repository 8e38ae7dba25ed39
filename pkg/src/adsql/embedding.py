"""Isometric embedding into the static slice and observer optimization.

``embed_newton`` solves the tau = 0 isometric embedding equations

    g_ij(X) X^i_a X^j_b = sigma_ab

collocated at the grid nodes for band-limited unknowns X^i, by damped Newton
iterations on the coefficient vector.  The linearization is solved in the
least-squares sense after projecting out the six rigid motions of the slice,
which are constructed explicitly from the slice Killing fields (boosts and
rotations restricted to the surface) rather than detected numerically; the
round-sphere linearization has exactly this six-dimensional kernel.

``optimize_observer`` minimizes F(p) = (1/8pi) int Omega_p (H0 - |H|) dS over
base points p of the hyperbolic slice, where Omega_p is the static potential
centered at p.  Writing slice points as future unit timelike vectors of
R^{3,1}, Omega_p(x) = -<p, x> is linear in p, so F restricted to the
hyperboloid is smooth and geodesically convex when H0 - |H| >= 0; descent with
an Armijo line search and retraction by normalization finds the minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .errors import (
    ConvergenceError,
    DomainError,
    PreconditionError,
    RigidityError,
    UnsupportedFeatureError,
)
from .reference import (
    DS_CHART_LIMIT,
    EmbeddingMap,
    KillingField,
    ReferenceChart,
    round_sphere_embedding,
    surface_geometry,
)
from .sphere import ScalarField, SphereGrid, SurfaceMetric, integrate

__all__ = [
    "EmbeddingSolution",
    "embed_round",
    "embed_newton",
    "embedding_jacobian",
    "rigid_motion_coefficients",
    "optimize_observer",
    "hyperboloid_distance",
]

MAX_ITER = 50
SV_RCOND = 1e-12


@dataclass
class EmbeddingSolution:
    """Result of an isometric embedding solve (always tau = 0)."""

    embedding: EmbeddingMap
    residual: float
    iterations: int
    gauge_report: dict
    residual_history: list = field(default_factory=list)
    convex: bool | None = None

    def report(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_history": list(self.residual_history),
            "gauge_report": dict(self.gauge_report),
            "convex": self.convex,
        }


def _metric_scale(sigma: SurfaceMetric) -> float:
    g = sigma.g
    return float(np.max(np.sqrt(g.tt**2 + 2.0 * g.tp**2 + g.pp**2)))


def _mismatch(sigma: SurfaceMetric, pull, scale: float) -> float:
    d = max(np.max(np.abs(pull.tt - sigma.g.tt)), np.max(np.abs(pull.tp - sigma.g.tp)),
            np.max(np.abs(pull.pp - sigma.g.pp)))
    return float(d / scale)


def embed_round(grid: SphereGrid, area_radius: float, chart: ReferenceChart) -> EmbeddingSolution:
    """Closed-form embedding of the round metric of the given area radius."""
    if area_radius <= 0.0:
        raise DomainError("area radius must be positive")
    if chart.kappa > 0 and area_radius >= DS_CHART_LIMIT:
        raise DomainError(f"dS radius must stay below {DS_CHART_LIMIT}")
    X = round_sphere_embedding(grid, area_radius, chart)
    sigma = SurfaceMetric.round_sphere(grid, area_radius)
    from .reference import pullback_metric

    res = _mismatch(sigma, pullback_metric(X, chart), _metric_scale(sigma))
    return EmbeddingSolution(embedding=X, residual=res, iterations=0,
                             gauge_report={}, residual_history=[res], convex=True)


def rigid_motion_coefficients(X: EmbeddingMap, chart: ReferenceChart) -> tuple[np.ndarray, list]:
    """Basis coefficient vectors of the six slice rigid motions along X.

    Columns are the harmonic coefficients of delta X^i = K^i(X) for the slice
    Killing fields c1..c3 (hyperbolic boosts) and j1..j3 (rotations).
    """
    grid = X.grid
    y = X.spatial()
    labels = ["c1", "c2", "c3", "j1", "j2", "j3"]
    cols = []
    for lab in labels:
        kf = KillingField.from_label(chart, lab)
        vals = kf.eval(np.zeros(grid.shape), y)[..., 1:]
        cols.append(np.concatenate([grid.analyze(vals[..., i]) for i in range(3)]))
    return np.stack(cols, axis=1), labels


def embedding_jacobian(X: EmbeddingMap, chart: ReferenceChart) -> np.ndarray:
    """Linearization of the pullback metric in the harmonic coefficient basis.

    Rows run over (tt, tp, pp) x nodes, columns over (component i, mode k).
    """
    grid = X.grid
    y = X.spatial()
    dx = np.stack([np.stack([grid.dtheta(y[..., i]) for i in range(3)], axis=-1),
                   np.stack([grid.dphi(y[..., i]) for i in range(3)], axis=-1)])
    g3 = chart.metric3(y)
    dg = chart.dmetric3(y)
    yv = grid.basis_values().reshape(grid.n_modes, -1)
    ydt = grid.basis_dtheta().reshape(grid.n_modes, -1)
    ydp = grid.basis_dphi().reshape(grid.n_modes, -1)
    dbasis = {0: ydt, 1: ydp}

    gdx = np.einsum("...ij,a...j->a...i", g3, dx)  # (2, nt, np, 3)
    ddx = {ab: np.einsum("...kij,...i,...j->...k", dg, dx[a], dx[b])
           for ab, (a, b) in {"tt": (0, 0), "tp": (0, 1), "pp": (1, 1)}.items()}

    n_nodes = grid.shape[0] * grid.shape[1]
    n_modes = grid.n_modes
    jac = np.empty((3 * n_nodes, 3 * n_modes))
    for ab_idx, (ab, (a, b)) in enumerate({"tt": (0, 0), "tp": (0, 1), "pp": (1, 1)}.items()):
        ga = gdx[a].reshape(-1, 3)
        gb = gdx[b].reshape(-1, 3)
        dd = ddx[ab].reshape(-1, 3)
        for i in range(3):
            block = (dbasis[a] * gb[:, i][None, :] + ga[:, i][None, :] * dbasis[b]
                     + yv * dd[:, i][None, :])
            jac[ab_idx * n_nodes:(ab_idx + 1) * n_nodes,
                i * n_modes:(i + 1) * n_modes] = block.T
    return jac


def embed_newton(sigma: SurfaceMetric, guess: EmbeddingMap, chart: ReferenceChart,
                 tol: float = 1e-10, max_iter: int = MAX_ITER) -> EmbeddingSolution:
    """Damped Newton solve of the tau = 0 isometric embedding equations.

    The guess must place sigma inside the Newton basin (intended use: small
    perturbations of round data).  Raises ConvergenceError (with residual
    history) when the budget is exhausted and RigidityError when the projected
    linearization is singular.
    """
    from .reference import pullback_metric

    grid = sigma.grid
    if guess.grid is not grid:
        raise PreconditionError("guess and target metric use different grids")
    if guess.tau.sup_norm() != 0.0:
        raise PreconditionError("embed_newton solves static-slice embeddings (tau = 0)")
    scale = _metric_scale(sigma)
    coeffs = np.concatenate([grid.analyze(guess.spatial()[..., i]) for i in range(3)])
    n_modes = grid.n_modes

    def to_embedding(c):
        y = np.stack([grid.synthesize(c[i * n_modes:(i + 1) * n_modes]) for i in range(3)],
                     axis=-1)
        return guess.with_spatial(y)

    def residual_vec(emb):
        pull = pullback_metric(emb, chart)
        return np.concatenate([(pull.tt - sigma.g.tt).ravel(),
                               (pull.tp - sigma.g.tp).ravel(),
                               (pull.pp - sigma.g.pp).ravel()])

    current = to_embedding(coeffs)
    res_vec = residual_vec(current)
    res = float(np.max(np.abs(res_vec)) / scale)
    history = [res]
    gauge_labels: list = []
    displacement = np.zeros_like(coeffs)

    for iteration in range(max_iter):
        if res <= tol:
            rigid, gauge_labels = rigid_motion_coefficients(current, chart)
            overlap = dict(zip(gauge_labels, np.abs(
                (rigid / np.linalg.norm(rigid, axis=0)).T @ displacement)))
            sol = EmbeddingSolution(embedding=current, residual=res, iterations=iteration,
                                    gauge_report=overlap, residual_history=history)
            sol.convex = surface_geometry(current, chart).convexity_margin() > 0.0
            return sol

        jac = embedding_jacobian(current, chart)
        rigid, gauge_labels = rigid_motion_coefficients(current, chart)
        complement = null_space(rigid.T)
        ju = jac @ complement
        step_u, _, rank, sv = np.linalg.lstsq(ju, -res_vec, rcond=SV_RCOND)
        if rank < complement.shape[1]:
            raise RigidityError(
                f"linearization rank-deficient beyond rigid motions (rank {rank})")
        step = complement @ step_u

        # Damped update: halve on residual increase.
        alpha = 1.0
        for _ in range(30):
            cand_coeffs = coeffs + alpha * step
            cand = to_embedding(cand_coeffs)
            cand_vec = residual_vec(cand)
            cand_res = float(np.max(np.abs(cand_vec)) / scale)
            if cand_res < res or cand_res <= tol:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError("damping failed to reduce the residual", history)
        displacement += alpha * step
        coeffs, current, res_vec, res = cand_coeffs, cand, cand_vec, cand_res
        history.append(res)

    raise ConvergenceError(
        f"no convergence to {tol:.1e} within {max_iter} iterations", history)


def isometric_constraint_operator(X: EmbeddingMap, chart: ReferenceChart) -> np.ndarray:
    """Linearized isometric-embedding constraint at X (tau may be nonzero).

    Maps stacked harmonic coefficients (dtau, dX^1, dX^2, dX^3) to the metric
    variation components over the nodes:

        dsigma_ab = -d(Omega^2) tau_a tau_b - Omega^2 (dtau_a tau_b + tau_a dtau_b)
                    + g_ij (dX^i_a X^j_b + X^i_a dX^j_b) + d_k g_ij dX^k X^i_a X^j_b.

    Rows: (tt, tp, pp) x nodes; columns: 4 x n_modes.
    """
    grid = X.grid
    n_nodes = grid.shape[0] * grid.shape[1]
    n_modes = grid.n_modes
    y = X.spatial()
    tau_a = [grid.dtheta(X.tau.values).ravel(), grid.dphi(X.tau.values).ravel()]
    om2 = (chart.omega(y) ** 2).ravel()
    dom2 = (2.0 * chart.sgn * y).reshape(-1, 3)  # d_k Omega^2

    spatial_jac = embedding_jacobian(X, chart)  # g-part, 3N x 3M
    yv = grid.basis_values().reshape(n_modes, -1)
    ydt = grid.basis_dtheta().reshape(n_modes, -1)
    ydp = grid.basis_dphi().reshape(n_modes, -1)
    dbasis = {0: ydt, 1: ydp}

    out = np.zeros((3 * n_nodes, 4 * n_modes))
    out[:, n_modes:] = spatial_jac
    for ab_idx, (a, b) in enumerate([(0, 0), (0, 1), (1, 1)]):
        rows = slice(ab_idx * n_nodes, (ab_idx + 1) * n_nodes)
        # tau-variation block
        out[rows, :n_modes] = -(om2 * (dbasis[a] * tau_a[b] + tau_a[a] * dbasis[b])).T
        # -d(Omega^2) tau_a tau_b correction to the spatial block
        for i in range(3):
            cols = slice((1 + i) * n_modes, (2 + i) * n_modes)
            out[rows, cols] += -(yv * (dom2[:, i] * tau_a[a] * tau_a[b])).T
    return out


def project_to_isometric(X: EmbeddingMap, chart: ReferenceChart,
                         dtau: np.ndarray, dx: np.ndarray):
    """Least-squares projection of a variation onto the linearized constraint.

    dtau is a node field, dx a node field of shape (nt, np, 3).  Returns the
    projected (dtau, dx) node fields.
    """
    grid = X.grid
    n_modes = grid.n_modes
    coeffs = np.concatenate([grid.analyze(dtau)]
                            + [grid.analyze(dx[..., i]) for i in range(3)])
    oper = isometric_constraint_operator(X, chart)
    corr, *_ = np.linalg.lstsq(oper, oper @ coeffs, rcond=None)
    proj = coeffs - corr
    out_tau = grid.synthesize(proj[:n_modes])
    out_x = np.stack([grid.synthesize(proj[(1 + i) * n_modes:(2 + i) * n_modes])
                      for i in range(3)], axis=-1)
    return out_tau, out_x


def perturb_embedding(X: EmbeddingMap, dtau: np.ndarray, dx: np.ndarray,
                      s: float) -> EmbeddingMap:
    """X + s * (dtau, dx) as node fields."""
    return X.with_tau(X.tau.values + s * dtau).with_spatial(X.spatial() + s * dx)


# ---------------------------------------------------------------------------
# Observer optimization
# ---------------------------------------------------------------------------


def hyperboloid_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Geodesic distance on the unit hyperboloid (points as (y1, y2, y3, y4))."""
    inner = p[0] * q[0] + p[1] * q[1] + p[2] * q[2] - p[3] * q[3]
    return float(np.arccosh(np.maximum(-inner, 1.0)))


def optimize_observer(data, sol: EmbeddingSolution, chart: ReferenceChart,
                      grad_tol: float = 1e-10, max_iter: int = 500):
    """Base point p* minimizing int Omega_p (H0 - |H|) dS and its energy.

    Preconditions: the embedding is a static-slice AdS surface and
    H0 - |H| >= 0 on it; a sign change defeats the convexity argument and
    raises PreconditionError.  When H0 = |H| identically the energy vanishes
    for every static potential and the chart origin is returned.
    """
    if chart.kappa != -1:
        raise UnsupportedFeatureError("observer optimization lives on the AdS slice")
    X = sol.embedding
    grid = X.grid
    geom = surface_geometry(X, chart)
    excess = geom.H0_norm.values - data.h_norm.values
    scale = float(np.max(geom.H0_norm.values))
    if np.min(excess) < -1e-10 * scale:
        raise PreconditionError("H0 - |H| changes sign; the energy is not convex in p")
    origin = np.array([0.0, 0.0, 0.0, 1.0])
    if np.max(np.abs(excess)) <= 1e-12 * scale:
        return origin, 0.0

    # Moment vector M = (1/8pi) int (y, Omega) (H0 - |H|) dS; F(p) = -<p, M>.
    y = X.spatial()
    eight_pi = 8.0 * np.pi
    m_vec = np.array([
        integrate(ScalarField(grid, y[..., 0] * excess), geom.sigma),
        integrate(ScalarField(grid, y[..., 1] * excess), geom.sigma),
        integrate(ScalarField(grid, y[..., 2] * excess), geom.sigma),
        integrate(ScalarField(grid, geom.omega.values * excess), geom.sigma),
    ]) / eight_pi

    eta = np.array([1.0, 1.0, 1.0, -1.0])

    def mink(a, b):
        return float(np.sum(eta * a * b))

    def f_of(p):
        return -mink(p, m_vec)

    p = origin.copy()
    fval = f_of(p)
    for _ in range(max_iter):
        # ambient gradient of F = -<p, M>: raise the differential with eta,
        # eta @ (-M_vec, +M_4) = -M; then project to the tangent space at p
        grad_amb = -m_vec
        v = grad_amb + mink(grad_amb, p) * p
        gnorm2 = mink(v, v)
        if gnorm2 <= grad_tol**2:
            return p, fval
        alpha = 1.0
        for _ in range(60):
            q = p - alpha * v
            qq = mink(q, q)
            if qq < 0.0:
                cand = q / np.sqrt(-qq)
                fc = f_of(cand)
                if fc <= fval - 0.25 * alpha * gnorm2:
                    p, fval = cand, fc
                    break
            alpha *= 0.5
        else:
            # Line search stalled at the optimum plateau.
            return p, fval
    raise ConvergenceError("observer optimization did not reach the gradient tolerance",
                           [fval])
