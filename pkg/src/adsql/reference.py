"""Static charts of the dS/AdS reference spacetime and embedded-surface geometry.

Chart
-----
The slice is coordinatized by y in R^3 (for AdS these are the spatial ambient
coordinates of the hyperboloid model, valid globally; for dS they cover the
hemisphere r = |y| < 1).  With s = -kappa (so s = +1 for AdS, -1 for dS):

    Omega^2   = 1 + s |y|^2
    g_ij      = delta_ij - s y_i y_j / Omega^2
    Gamma^l_ij = -s y_l g_ij                      (slice connection)
    gcheck    = -Omega^2 dt^2 + g_ij dy^i dy^j

Both closed forms satisfy the static equation Hess(Omega) = -kappa Omega g
identically, which `static_residual` checks by combining the independently
coded pieces.

Surfaces
--------
An embedding is the quadruple of fields (tau, X^1, X^2, X^3) over the sphere
grid.  `surface_geometry` computes every derived quantity of the surface and
of its projection to the static slice with exact chart Christoffel symbols and
spectral tangential derivatives; no finite differencing is used in this path.
The frame (e3, e4) is the outward slice normal pushed along the static flow
and the future unit normal orthogonal to it.  `projection_residuals` and
`conservation_residual` then quantify the projection identities and the
conservation law, all of which are identities of the continuum geometry and
pure discretization error here.

Killing fields of AdS come from the ambient R^{3,2} hyperboloid

    y^0 = Omega sin t,  y^i (chart),  y^4 = Omega cos t,

with the boost families p^i = y^i d_0 + y^0 d_i, c^i = y^i d_4 + y^4 d_i, the
rotations j^k, and the time axis d_t = y^4 d_0 - y^0 d_4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    DegenerateDataError,
    DomainError,
    EmbeddingError,
    UnsupportedFeatureError,
)
from .sphere import (
    OneFormField,
    ScalarField,
    SphereGrid,
    SurfaceMetric,
    SymTensorField,
    divergence,
)

__all__ = [
    "ReferenceChart",
    "static_chart",
    "KillingField",
    "killing_basis",
    "AdSIsometry",
    "EmbeddingMap",
    "round_sphere_embedding",
    "graph_over_sphere",
    "ReferenceSurfaceGeometry",
    "surface_geometry",
    "projection_residuals",
    "conservation_residual",
]

DS_CHART_LIMIT = 0.9  # stay away from the dS horizon r = 1

# Ambient R^{3,2} metric, coordinate order (y0, y1, y2, y3, y4).
AMBIENT_ETA = np.diag([-1.0, 1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True)
class ReferenceChart:
    """One static chart: kappa = -1 is AdS (slice H^3), +1 is dS (slice S^3)."""

    kind: str
    kappa: int

    @property
    def sgn(self) -> int:
        return -self.kappa

    def check_points(self, y: np.ndarray):
        if self.kappa > 0:
            r = np.sqrt(np.sum(np.asarray(y) ** 2, axis=-1))
            if np.any(r >= 1.0):
                raise DomainError("dS chart point beyond the horizon r = 1")

    def omega(self, y: np.ndarray) -> np.ndarray:
        return np.sqrt(1.0 + self.sgn * np.sum(y**2, axis=-1))

    def omega_grad(self, y: np.ndarray) -> np.ndarray:
        """Slice-coordinate partials d_i Omega, shape y.shape."""
        return self.sgn * y / self.omega(y)[..., None]

    def metric3(self, y: np.ndarray) -> np.ndarray:
        """g_ij at each point, shape (..., 3, 3)."""
        om2 = 1.0 + self.sgn * np.sum(y**2, axis=-1)
        eye = np.eye(3)
        return eye - self.sgn * y[..., :, None] * y[..., None, :] / om2[..., None, None]

    def metric3_inv(self, y: np.ndarray) -> np.ndarray:
        return np.eye(3) + self.sgn * y[..., :, None] * y[..., None, :]

    def dmetric3(self, y: np.ndarray) -> np.ndarray:
        """Coordinate partials d_k g_ij, shape (..., 3, 3, 3) indexed [k, i, j]."""
        s = self.sgn
        om2 = 1.0 + s * np.sum(y**2, axis=-1)
        eye = np.eye(3)
        t1 = eye[:, :, None] * y[..., None, None, :]  # delta_ki y_j
        t2 = eye[:, None, :] * y[..., None, :, None]  # delta_kj y_i
        t3 = y[..., :, None, None] * y[..., None, :, None] * y[..., None, None, :]
        return (-s * (t1 + t2) / om2[..., None, None, None]
                + 2.0 * s * s * t3 / (om2**2)[..., None, None, None])

    def gamma3(self, y: np.ndarray) -> np.ndarray:
        """Slice Christoffels Gamma^l_{ij} = -s y^l g_ij, shape (..., 3, 3, 3)."""
        g = self.metric3(y)
        return -self.sgn * y[..., :, None, None] * g[..., None, :, :]

    def metric4(self, y: np.ndarray) -> np.ndarray:
        """Spacetime metric in (t, y) components, shape (..., 4, 4)."""
        out = np.zeros(y.shape[:-1] + (4, 4))
        out[..., 0, 0] = -(self.omega(y) ** 2)
        out[..., 1:, 1:] = self.metric3(y)
        return out

    def gamma4(self, y: np.ndarray) -> np.ndarray:
        """Spacetime Christoffels Gamma^mu_{nu lam} in (t, y) order.

        Nonzero blocks: Gamma^t_{t i} = d_i Omega / Omega, Gamma^i_{tt} =
        s y^i Omega^2, and the slice block.  Static, so t-independent.
        """
        om = self.omega(y)
        out = np.zeros(y.shape[:-1] + (4, 4, 4))
        dlog = self.sgn * y / (om**2)[..., None]
        out[..., 0, 0, 1:] = dlog
        out[..., 0, 1:, 0] = dlog
        out[..., 1:, 0, 0] = self.sgn * y * (om**2)[..., None]
        out[..., 1:, 1:, 1:] = self.gamma3(y)
        return out

    def static_residual(self, y: np.ndarray) -> float:
        """Sup norm of Hess(Omega) + kappa Omega g from the closed forms."""
        om = self.omega(y)
        s = self.sgn
        dd = (s * np.eye(3) / om[..., None, None]
              - s * s * y[..., :, None] * y[..., None, :] / (om**3)[..., None, None])
        hess = dd - np.einsum("...kij,...k->...ij", self.gamma3(y), self.omega_grad(y))
        res = hess + self.kappa * om[..., None, None] * self.metric3(y)
        return float(np.max(np.abs(res)))


def static_chart(kind: str) -> ReferenceChart:
    """The AdS or dS static chart (kind in {"ads", "ds"})."""
    k = kind.strip().lower()
    if k in ("ads", "anti-de sitter"):
        return ReferenceChart("ads", -1)
    if k in ("ds", "de sitter"):
        return ReferenceChart("ds", +1)
    raise DomainError(f"unknown reference kind {kind!r}")


# ---------------------------------------------------------------------------
# Killing fields and isometries (AdS)
# ---------------------------------------------------------------------------

_BASIS_LABELS = ("time", "p1", "p2", "p3", "c1", "c2", "c3", "j1", "j2", "j3")


def _generator_matrix(label: str) -> np.ndarray:
    """so(3,2) matrix of a basis Killing field, K^u = M^u_v y^v."""
    m = np.zeros((5, 5))
    if label == "time":
        m[0, 4] = 1.0
        m[4, 0] = -1.0
    elif label.startswith("p"):
        i = int(label[1])
        m[0, i] = 1.0
        m[i, 0] = 1.0
    elif label.startswith("c"):
        i = int(label[1])
        m[4, i] = 1.0
        m[i, 4] = 1.0
    elif label.startswith("j"):
        k = int(label[1])
        for i in range(1, 4):
            for j in range(1, 4):
                m[j, i] += _eps3(i, j, k)
    else:
        raise ValueError(f"unknown Killing label {label!r}")
    return m


def _eps3(i: int, j: int, k: int) -> float:
    return float((i - j) * (j - k) * (k - i)) / 2.0


@dataclass(frozen=True)
class KillingField:
    """A Killing field of the AdS reference, as coefficients over the 10-basis."""

    chart: ReferenceChart
    coeffs: tuple
    label: str = ""

    def __post_init__(self):
        if self.chart.kappa != -1:
            raise UnsupportedFeatureError("the Killing basis is implemented for AdS only")
        if len(self.coeffs) != 10:
            raise ValueError("need 10 basis coefficients")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @classmethod
    def from_label(cls, chart: ReferenceChart, label: str) -> "KillingField":
        c = [0.0] * 10
        c[_BASIS_LABELS.index(label)] = 1.0
        return cls(chart, tuple(c), label)

    @classmethod
    def combination(cls, chart: ReferenceChart, A=0.0, B=(0, 0, 0), D=(0, 0, 0),
                    F=(0, 0, 0)) -> "KillingField":
        """A*time + B_k p^k + D_k c^k + F_k j^k."""
        c = (float(A), *map(float, B), *map(float, D), *map(float, F))
        return cls(chart, c, "combination")

    def matrix(self) -> np.ndarray:
        """Ambient so(3,2) generator of this field."""
        m = np.zeros((5, 5))
        for c, lab in zip(self.coeffs, _BASIS_LABELS):
            if c != 0.0:
                m += c * _generator_matrix(lab)
        return m

    def eval(self, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Chart components (K^t, K^y1, K^y2, K^y3) at points (t, y).

        Closed forms with Omega = Omega(y), y0 = Omega sin t, y4 = Omega cos t:
            d_t : (1, 0)
            p^i : (y^i cos t / Omega,  delta^{ij} Omega sin t)
            c^i : (-y^i sin t / Omega, delta^{ij} Omega cos t)
            j^k : (0, eps_{ijk} y^i)
        """
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        om = self.chart.omega(y)
        ct, st = np.cos(t), np.sin(t)
        out = np.zeros(y.shape[:-1] + (4,))
        cA = self.coeffs[0]
        out[..., 0] += cA
        for i in range(3):
            cB = self.coeffs[1 + i]
            if cB != 0.0:
                out[..., 0] += cB * y[..., i] * ct / om
                out[..., 1 + i] += cB * om * st
            cD = self.coeffs[4 + i]
            if cD != 0.0:
                out[..., 0] += -cD * y[..., i] * st / om
                out[..., 1 + i] += cD * om * ct
        for k in range(3):
            cF = self.coeffs[7 + k]
            if cF != 0.0:
                for i in range(3):
                    for j in range(3):
                        e = _eps3(i + 1, j + 1, k + 1)
                        if e != 0.0:
                            out[..., 1 + j] += cF * e * y[..., i]
        return out

    def __add__(self, other: "KillingField") -> "KillingField":
        c = tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        return KillingField(self.chart, c, "combination")

    def __rmul__(self, scalar: float) -> "KillingField":
        return KillingField(self.chart, tuple(scalar * c for c in self.coeffs), self.label)


def killing_basis(chart: ReferenceChart) -> list[KillingField]:
    """The ten AdS Killing fields: time, p1..p3, c1..c3, j1..j3."""
    if chart.kappa != -1:
        raise UnsupportedFeatureError("the Killing basis is implemented for AdS only")
    return [KillingField.from_label(chart, lab) for lab in _BASIS_LABELS]


class AdSIsometry:
    """An SO(3,2) element acting on the static chart of AdS."""

    def __init__(self, chart: ReferenceChart, matrix: np.ndarray):
        if chart.kappa != -1:
            raise UnsupportedFeatureError("isometries are implemented for AdS only")
        self.chart = chart
        self.W = np.asarray(matrix, dtype=float)
        err = self.W.T @ AMBIENT_ETA @ self.W - AMBIENT_ETA
        if np.max(np.abs(err)) > 1e-10:
            raise ValueError("matrix does not preserve the ambient metric")

    @classmethod
    def from_killing(cls, kf: KillingField, s: float) -> "AdSIsometry":
        """exp(s K) for a Killing field K."""
        return cls(kf.chart, expm(s * kf.matrix()))

    @classmethod
    def rotation_z(cls, chart: ReferenceChart, angle: float) -> "AdSIsometry":
        return cls.from_killing(KillingField.from_label(chart, "j3"), angle)

    def inverse(self) -> "AdSIsometry":
        return AdSIsometry(self.chart, AMBIENT_ETA @ self.W.T @ AMBIENT_ETA)

    def compose(self, other: "AdSIsometry") -> "AdSIsometry":
        return AdSIsometry(self.chart, self.W @ other.W)

    def apply_point(self, t: np.ndarray, y: np.ndarray):
        """Map chart points (t, y) -> (t', y')."""
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        om = self.chart.omega(y)
        amb = np.zeros(y.shape[:-1] + (5,))
        amb[..., 0] = om * np.sin(t)
        amb[..., 1:4] = y
        amb[..., 4] = om * np.cos(t)
        amb2 = amb @ self.W.T
        t2 = np.arctan2(amb2[..., 0], amb2[..., 4])
        return t2, amb2[..., 1:4]

    def apply_killing(self, kf: KillingField) -> "KillingField":
        """Push-forward: K -> W K W^{-1}, re-expressed over the basis."""
        m2 = self.W @ kf.matrix() @ self.inverse().W
        coeffs = _matrix_to_coeffs(m2)
        return KillingField(kf.chart, coeffs, "pushforward")


def conjugate_to_time(kf: KillingField, tol: float = 1e-9) -> AdSIsometry:
    """An isometry W with W_* d_t = kf, for kf in the strict orbit of d_t.

    The generator of d_t squares to -1 on an invariant timelike 2-plane and to
    0 on its eta-complement, so a conjugate L must satisfy L^2 with rank 2 and
    (L^2)^2 = -L^2; any failure (wrong rotation rate, residual spatial
    rotation, spacelike plane) raises ObserverError.
    """
    from .errors import ObserverError

    lam = kf.matrix()
    s = lam @ lam
    scale = max(np.max(np.abs(s)), 1e-30)
    if np.max(np.abs(s @ s + s)) > tol * scale:
        raise ObserverError("observer is not conjugate to the time axis (rate != 1)")
    u_svd, sv, vt = np.linalg.svd(s)
    if not (np.sum(sv > 0.5) == 2 and np.all(sv[2:] < tol * max(sv[0], 1.0))):
        raise ObserverError("observer generator has the wrong invariant-plane structure")
    kernel = vt[2:].T
    if np.max(np.abs(lam @ kernel)) > tol * max(np.max(np.abs(lam)), 1.0):
        raise ObserverError("observer carries a residual spatial rotation")

    plane = u_svd[:, :2]
    eta = AMBIENT_ETA

    def eta_dot(a, b):
        return float(a @ eta @ b)

    p1 = plane[:, 0]
    if eta_dot(p1, p1) >= 0.0:
        raise ObserverError("invariant plane is not timelike")
    u = p1 / np.sqrt(-eta_dot(p1, p1))

    basis = []
    for k in range(3):
        b = kernel[:, k].copy()
        for prev in basis:
            b -= eta_dot(prev, b) * prev
        nn = eta_dot(b, b)
        if nn <= 0.0:
            raise ObserverError("complement of the invariant plane is not spacelike")
        basis.append(b / np.sqrt(nn))

    time_gen = _generator_matrix("time")
    for sign in (1.0, -1.0):
        uu = sign * u
        vv = lam @ uu
        w = np.column_stack([vv, basis[0], basis[1], basis[2], uu])
        if np.linalg.det(w) < 0.0:
            w[:, 3] = -w[:, 3]  # keep the slice action proper
        if np.max(np.abs(w.T @ eta @ w - eta)) > 1e-8:
            continue
        if np.max(np.abs(w @ time_gen @ (eta @ w.T @ eta) - lam)) <= 1e-8 * max(1.0, scale):
            return AdSIsometry(kf.chart, w)
    raise ObserverError("failed to orient the conjugating isometry")


def _matrix_to_coeffs(m: np.ndarray) -> tuple:
    """Coefficients over the 10-generator basis of an so(3,2) matrix."""
    coeffs = []
    for lab in _BASIS_LABELS:
        gen = _generator_matrix(lab)
        coeffs.append(float(np.sum(m * gen) / np.sum(gen * gen)))
    rec = sum(c * _generator_matrix(lab) for c, lab in zip(coeffs, _BASIS_LABELS))
    if np.max(np.abs(rec - m)) > 1e-9 * max(1.0, np.max(np.abs(m))):
        raise ValueError("matrix is not in the span of the Killing generators")
    return tuple(coeffs)


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingMap:
    """Chart components (tau, X^1, X^2, X^3) of a surface embedding."""

    tau: ScalarField
    x1: ScalarField
    x2: ScalarField
    x3: ScalarField

    @property
    def grid(self) -> SphereGrid:
        return self.tau.grid

    def spatial(self) -> np.ndarray:
        """Slice coordinates of the nodes, shape (ntheta, nphi, 3)."""
        return np.stack([self.x1.values, self.x2.values, self.x3.values], axis=-1)

    def with_tau(self, tau_values: np.ndarray) -> "EmbeddingMap":
        return EmbeddingMap(ScalarField(self.grid, tau_values), self.x1, self.x2, self.x3)

    def with_spatial(self, y: np.ndarray) -> "EmbeddingMap":
        g = self.grid
        return EmbeddingMap(self.tau, ScalarField(g, y[..., 0]), ScalarField(g, y[..., 1]),
                            ScalarField(g, y[..., 2]))

    def transform(self, iso: AdSIsometry) -> "EmbeddingMap":
        t2, y2 = iso.apply_point(self.tau.values, self.spatial())
        g = self.grid
        return EmbeddingMap(ScalarField(g, t2), ScalarField(g, y2[..., 0]),
                            ScalarField(g, y2[..., 1]), ScalarField(g, y2[..., 2]))

    def to_json_dict(self) -> dict:
        return {
            "tau": self.tau.to_json_dict(),
            "X1": self.x1.to_json_dict(),
            "X2": self.x2.to_json_dict(),
            "X3": self.x3.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, data: dict, grid: SphereGrid | None = None) -> "EmbeddingMap":
        tau = ScalarField.from_json_dict(data["tau"], grid)
        g = tau.grid
        return cls(tau, ScalarField.from_json_dict(data["X1"], g),
                   ScalarField.from_json_dict(data["X2"], g),
                   ScalarField.from_json_dict(data["X3"], g))


def round_sphere_embedding(grid: SphereGrid, radius: float,
                           chart: ReferenceChart) -> EmbeddingMap:
    """Coordinate sphere of the given radius in the static slice."""
    if radius <= 0.0:
        raise DomainError("radius must be positive")
    if chart.kappa > 0 and radius >= DS_CHART_LIMIT:
        raise DomainError(f"dS generators are restricted to r < {DS_CHART_LIMIT}")
    x1, x2, x3 = grid.unit_cartesian()
    z = ScalarField.constant(grid, 0.0)
    return EmbeddingMap(z, ScalarField(grid, radius * x1), ScalarField(grid, radius * x2),
                        ScalarField(grid, radius * x3))


def graph_over_sphere(grid: SphereGrid, radius: float, tau_values: np.ndarray,
                      chart: ReferenceChart) -> EmbeddingMap:
    """Time graph tau(v) over the coordinate sphere of the given radius."""
    base = round_sphere_embedding(grid, radius, chart)
    return base.with_tau(np.asarray(tau_values, dtype=float))


# ---------------------------------------------------------------------------
# Surface geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceSurfaceGeometry:
    """Everything derived from one embedded surface in the reference spacetime.

    Tangent/normal data are stored as raw arrays over the nodes: ``frame_e3``
    and ``frame_e4`` have shape (ntheta, nphi, 4) in (t, y) components, and
    ``tangents`` has shape (2, ntheta, nphi, 4) for (d_theta X, d_phi X).
    """

    chart: ReferenceChart
    embedding: EmbeddingMap
    sigma: SurfaceMetric
    sigma_hat: SurfaceMetric
    H0_norm: ScalarField
    alpha_H0: OneFormField
    alpha_e3: OneFormField
    theta: ScalarField
    Hhat: ScalarField
    hhat: SymTensorField
    A: ScalarField
    B: ScalarField
    omega: ScalarField
    e3_omega: ScalarField
    tau_form: OneFormField
    grad_tau_sq: ScalarField      # |grad tau|^2 with sigma
    grad_tau_hat_sq: ScalarField  # |hat-grad tau|^2 with sigma_hat
    H0_e3: ScalarField            # <H0, e3>
    H0_e4: ScalarField            # <H0, e4>
    tangents: np.ndarray
    frame_e3: np.ndarray
    frame_e4: np.ndarray

    @property
    def grid(self) -> SphereGrid:
        return self.embedding.grid

    def is_time_symmetric(self, tol: float = 1e-12) -> bool:
        return self.embedding.tau.sup_norm() <= tol

    def convexity_margin(self) -> float:
        """min eigenvalue of hhat relative to sigma_hat (positive = convex)."""
        h = self.hhat
        g = self.sigma_hat
        # Generalized eigenvalues of (h, g) for 2x2 symmetric pairs.
        a = h.tt * g.inv_tt + h.tp * g.inv_tp
        d = h.tp * g.inv_tp + h.pp * g.inv_pp
        b = h.tt * g.inv_tp + h.tp * g.inv_pp
        c = h.tp * g.inv_tt + h.pp * g.inv_tp
        tr = a + d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
        return float(np.min(tr / 2.0 - disc))


def _ambient_contract(g4: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...a,...b->...", g4, u, v)


def surface_geometry(X: EmbeddingMap, chart: ReferenceChart) -> ReferenceSurfaceGeometry:
    """All derived geometry of the embedded surface X.

    Raises EmbeddingError for a non-Riemannian induced metric and
    DegenerateDataError when the mean-curvature vector fails to be spacelike.
    """
    grid = X.grid
    y = X.spatial()
    chart.check_points(y)
    tau = X.tau.values

    dth = grid.dtheta
    dph = grid.dphi

    # Tangents E_a = (tau_a, X^i_a) and their spectral second derivatives.
    comp = [tau, y[..., 0], y[..., 1], y[..., 2]]
    d1 = np.stack([[dth(c) for c in comp], [dph(c) for c in comp]])  # (2, 4, nt, np)
    E = np.moveaxis(d1, 1, -1)  # (2, nt, np, 4)

    g4 = chart.metric4(y)
    g3 = chart.metric3(y)
    gam4 = chart.gamma4(y)
    gam3 = chart.gamma3(y)
    om = chart.omega(y)
    dom = chart.omega_grad(y)

    tau_a = d1[:, 0]  # (2, nt, np)
    dx = np.moveaxis(d1[:, 1:], 1, -1)  # (2, nt, np, 3)

    # Induced metric sigma_ab = -Omega^2 tau_a tau_b + g_ij X^i_a X^j_b and the
    # projected metric sigma_hat (the g-part alone).
    ghat = np.einsum("...ij,a...i,b...j->ab...", g3, dx, dx)
    sig = ghat - (om**2)[None, None] * tau_a[:, None] * tau_a[None, :]
    sigma = SurfaceMetric(SymTensorField(grid, sig[0, 0], sig[0, 1], sig[1, 1]))
    try:
        sigma_hat = SurfaceMetric(SymTensorField(grid, ghat[0, 0], ghat[0, 1], ghat[1, 1]))
    except EmbeddingError as exc:
        raise EmbeddingError("projected surface is not an embedding") from exc

    # Outward slice normal of the projection: metric-independent annihilator
    # eps_{ijk} X^j_theta X^k_phi, raised with g^{ij}; sign fixed outward via
    # the (theta, phi) orientation.
    cross = np.cross(dx[0], dx[1])
    nu_up = np.einsum("...ij,...j->...i", chart.metric3_inv(y), cross)
    nn = np.einsum("...ij,...i,...j->...", g3, nu_up, nu_up)
    if np.any(nn <= 0.0):
        raise EmbeddingError("projected surface normal degenerates")
    nu = nu_up / np.sqrt(nn)[..., None]
    # Orient outward independently of the parametrization handedness: the
    # normal must point away from the area centroid on balance.
    dens = grid.weights * sigma_hat.sqrt_det / grid.sin_theta[:, None]
    centroid = np.einsum("tp,tpi->i", dens, y) / np.sum(dens)
    outward = np.einsum("tp,tp->", dens,
                        np.einsum("...ij,...i,...j->...", g3, nu, y - centroid))
    if outward < 0.0:
        nu = -nu

    # Second fundamental form of the projection, hhat_ab = -g(nu, DD_ab Xhat).
    hess = [grid.hessian_components(c) for c in comp]  # per component: (tt, tp, pp)
    hh = np.empty((2, 2) + grid.shape)
    ddx = {
        (0, 0): np.stack([hess[i][0] for i in (1, 2, 3)], axis=-1),
        (0, 1): np.stack([hess[i][1] for i in (1, 2, 3)], axis=-1),
        (1, 1): np.stack([hess[i][2] for i in (1, 2, 3)], axis=-1),
    }
    for (a, b), dd in ddx.items():
        cov = dd + np.einsum("...kij,...i,...j->...k", gam3, dx[a], dx[b])
        hh[a, b] = -np.einsum("...ij,...i,...j->...", g3, nu, cov)
    hh[1, 0] = hh[0, 1]
    hhat = SymTensorField(grid, hh[0, 0], hh[0, 1], hh[1, 1])
    Hhat = (sigma_hat.inv_tt * hh[0, 0] + 2.0 * sigma_hat.inv_tp * hh[0, 1]
            + sigma_hat.inv_pp * hh[1, 1])

    # Spacetime frame: e3 = (0, nu) pushed along the static flow; e4 = the
    # future unit normal, found from the metric-weighted 4D cross product.
    e3 = np.zeros(grid.shape + (4,))
    e3[..., 1:] = nu
    # Covector annihilating span{E_theta, E_phi, e3} via cofactor expansion,
    # then raised with the inverse spacetime metric and normalized.
    w = np.empty(grid.shape + (4,))
    stack = np.stack([E[0], E[1], e3], axis=-2)  # (..., 3, 4)
    for mu in range(4):
        cols = [c for c in range(4) if c != mu]
        w[..., mu] = (-1.0) ** mu * np.linalg.det(stack[..., cols])
    g4inv = np.zeros_like(g4)
    g4inv[..., 0, 0] = -1.0 / om**2
    g4inv[..., 1:, 1:] = chart.metric3_inv(y)
    wu = np.einsum("...ab,...b->...a", g4inv, w)
    wn = _ambient_contract(g4, wu, wu)
    if np.any(wn >= 0.0):
        raise EmbeddingError("surface is not spacelike (no timelike normal)")
    e4 = wu / np.sqrt(-wn)[..., None]
    flip = e4[..., 0] < 0.0
    e4[flip] *= -1.0

    # Mean-curvature contractions <H0, e3/e4> = sigma^{ab} <DD_ab X, e_*>.
    inv = np.empty((2, 2) + grid.shape)
    inv[0, 0], inv[0, 1], inv[1, 1] = sigma.inv_tt, sigma.inv_tp, sigma.inv_pp
    inv[1, 0] = inv[0, 1]
    ddX = {
        (0, 0): np.stack([hess[i][0] for i in range(4)], axis=-1),
        (0, 1): np.stack([hess[i][1] for i in range(4)], axis=-1),
        (1, 1): np.stack([hess[i][2] for i in range(4)], axis=-1),
    }
    k3 = np.empty((2, 2) + grid.shape)
    k4 = np.empty((2, 2) + grid.shape)
    for (a, b), dd in ddX.items():
        cov = dd + np.einsum("...uvw,...v,...w->...u", gam4, E[a], E[b])
        k3[a, b] = _ambient_contract(g4, cov, e3)
        k4[a, b] = _ambient_contract(g4, cov, e4)
    k3[1, 0], k4[1, 0] = k3[0, 1], k4[0, 1]
    H0_e3 = np.einsum("ab...,ab...->...", inv, k3)
    H0_e4 = np.einsum("ab...,ab...->...", inv, k4)

    h0sq = H0_e3**2 - H0_e4**2
    scale = np.max(np.abs(H0_e3)) + np.max(np.abs(H0_e4))
    if np.any(h0sq <= (1e-10 * max(scale, 1.0)) ** 2):
        raise DegenerateDataError("mean-curvature vector is not spacelike (|H0| ~ 0)")
    H0_norm = np.sqrt(h0sq)
    theta = np.arcsinh(H0_e4 / H0_norm)

    # Connection one-forms: alpha_e3 directly, alpha_H0 from the mean-curvature
    # gauge frame (unit -H0/|H0| and its light-cone reflection J0/|H0|).
    def covariant_along(vfield: np.ndarray) -> list[np.ndarray]:
        out = []
        for a in range(2):
            dv = np.stack([dth(vfield[..., mu]) if a == 0 else dph(vfield[..., mu])
                           for mu in range(4)], axis=-1)
            out.append(dv + np.einsum("...uvw,...v,...w->...u", gam4, E[a], vfield))
        return out

    de3 = covariant_along(e3)
    alpha_e3 = OneFormField(grid, _ambient_contract(g4, de3[0], e4),
                            _ambient_contract(g4, de3[1], e4))

    mc3 = -(H0_e3[..., None] * e3 - H0_e4[..., None] * e4) / H0_norm[..., None]
    mc4 = (H0_e4[..., None] * e3 - H0_e3[..., None] * e4) / H0_norm[..., None]
    dmc4 = covariant_along(mc4)
    alpha_H0 = OneFormField(grid, -_ambient_contract(g4, dmc4[0], mc3),
                            -_ambient_contract(g4, dmc4[1], mc3))

    # Scalars A, B and the gradient norms of tau.
    tau_form = OneFormField(grid, tau_a[0], tau_a[1])
    gts = sigma.norm2_form(tau_form)
    gts_hat = sigma_hat.norm2_form(tau_form)
    A = om * np.sqrt(1.0 + om**2 * gts)
    B = divergence(OneFormField(grid, om**2 * tau_a[0], om**2 * tau_a[1]), sigma)
    e3_om = np.einsum("...i,...i->...", nu, dom)

    return ReferenceSurfaceGeometry(
        chart=chart,
        embedding=X,
        sigma=sigma,
        sigma_hat=sigma_hat,
        H0_norm=ScalarField(grid, H0_norm),
        alpha_H0=alpha_H0,
        alpha_e3=alpha_e3,
        theta=ScalarField(grid, theta),
        Hhat=ScalarField(grid, Hhat),
        hhat=hhat,
        A=ScalarField(grid, A),
        B=B,
        omega=ScalarField(grid, om),
        e3_omega=ScalarField(grid, e3_om),
        tau_form=tau_form,
        grad_tau_sq=ScalarField(grid, gts),
        grad_tau_hat_sq=ScalarField(grid, gts_hat),
        H0_e3=ScalarField(grid, H0_e3),
        H0_e4=ScalarField(grid, H0_e4),
        tangents=E,
        frame_e3=e3,
        frame_e4=e4,
    )


def pullback_metric(X: EmbeddingMap, chart: ReferenceChart) -> SymTensorField:
    """Induced metric components of X without the rest of the geometry."""
    grid = X.grid
    y = X.spatial()
    tau = X.tau.values
    d = [grid.dtheta, grid.dphi]
    tau_a = np.stack([op(tau) for op in d])
    dx = np.stack([np.stack([op(y[..., i]) for i in range(3)], axis=-1) for op in d])
    g3 = chart.metric3(y)
    om2 = chart.omega(y) ** 2
    sig = (np.einsum("...ij,a...i,b...j->ab...", g3, dx, dx)
           - om2[None, None] * tau_a[:, None] * tau_a[None, :])
    return SymTensorField(grid, sig[0, 0], sig[0, 1], sig[1, 1])


# ---------------------------------------------------------------------------
# Identity residuals
# ---------------------------------------------------------------------------


def projection_residuals(geom: ReferenceSurfaceGeometry) -> dict[str, float]:
    """Sup norms of the projection/static identities for one surface.

    Keys: decompose_e4, decompose_t, mean_curvature_projection (the
    Hhat identity), connection_form (alpha_e3 vs the hhat expression),
    area_relation, gauge_angle, alpha_gauge_shift (alpha_H0 = alpha_e3 +
    d theta), and for time-symmetric surfaces static_restriction_laplace /
    static_restriction_mixed.
    """
    grid = geom.grid
    chart = geom.chart
    X = geom.embedding
    y = X.spatial()
    om = geom.omega.values
    tau_a = geom.tau_form
    sqrt_fac = np.sqrt(1.0 + om**2 * geom.grad_tau_sq.values)

    res: dict[str, float] = {}

    # Frame decompositions along the static flow.
    vt_hat, vp_hat = geom.sigma_hat.raise_form(tau_a)
    grad_tau_hat = (vt_hat[..., None] * geom.tangents[0, ..., 1:]
                    + vp_hat[..., None] * geom.tangents[1, ..., 1:])
    e4_pred = np.zeros(grid.shape + (4,))
    e4_pred[..., 0] = sqrt_fac / om
    e4_pred[..., 1:] = sqrt_fac[..., None] * om[..., None] * grad_tau_hat
    res["decompose_e4"] = float(np.max(np.abs(geom.frame_e4 - e4_pred)))

    vt, vp = geom.sigma.raise_form(tau_a)
    grad_tau4 = vt[..., None] * geom.tangents[0] + vp[..., None] * geom.tangents[1]
    dt_pred = (om * sqrt_fac)[..., None] * geom.frame_e4 - (om**2)[..., None] * grad_tau4
    dt_true = np.zeros(grid.shape + (4,))
    dt_true[..., 0] = 1.0
    res["decompose_t"] = float(np.max(np.abs(dt_true - dt_pred)))

    # Mean-curvature projection and the connection-form identity.
    alpha_of_grad = geom.alpha_e3.comp_theta * vt + geom.alpha_e3.comp_phi * vp
    res["mean_curvature_projection"] = float(np.max(np.abs(
        geom.Hhat.values + geom.H0_e3.values + om / sqrt_fac * alpha_of_grad)))

    pred_t = sqrt_fac * (om * (geom.hhat.tt * vt_hat + geom.hhat.tp * vp_hat)
                         - geom.e3_omega.values * tau_a.comp_theta)
    pred_p = sqrt_fac * (om * (geom.hhat.tp * vt_hat + geom.hhat.pp * vp_hat)
                         - geom.e3_omega.values * tau_a.comp_phi)
    res["connection_form"] = float(max(
        np.max(np.abs(geom.alpha_e3.comp_theta - pred_t)),
        np.max(np.abs(geom.alpha_e3.comp_phi - pred_p))))

    res["area_relation"] = float(np.max(np.abs(
        (1.0 - om**2 * geom.grad_tau_hat_sq.values)
        * (1.0 + om**2 * geom.grad_tau_sq.values) - 1.0)))

    res["gauge_angle"] = float(np.max(np.abs(
        np.sinh(geom.theta.values) + geom.B.values / (geom.H0_norm.values * geom.A.values))))

    # alpha_e3 = alpha_H0 + d theta: the gauge-shift identity in the form the
    # conservation-law derivation actually uses.
    dtheta_form = OneFormField(grid, grid.dtheta(geom.theta.values),
                               grid.dphi(geom.theta.values))
    shift = geom.alpha_H0 + dtheta_form - geom.alpha_e3
    res["alpha_gauge_shift"] = shift.sup_norm()

    if geom.is_time_symmetric():
        from .sphere import laplacian as _lap

        om_field = geom.omega
        lap_om = _lap(om_field, geom.sigma)
        res["static_restriction_laplace"] = float(np.max(np.abs(
            lap_om.values + 2.0 * chart.kappa * om
            + geom.Hhat.values * geom.e3_omega.values)))

        dom_surface = OneFormField(grid, grid.dtheta(om), grid.dphi(om))
        gt, gp = geom.sigma.raise_form(dom_surface)
        de3om_t = grid.dtheta(geom.e3_omega.values)
        de3om_p = grid.dphi(geom.e3_omega.values)
        res["static_restriction_mixed"] = float(max(
            np.max(np.abs(de3om_t - (geom.hhat.tt * gt + geom.hhat.tp * gp))),
            np.max(np.abs(de3om_p - (geom.hhat.tp * gt + geom.hhat.pp * gp)))))

    return res


def conservation_residual(geom: ReferenceSurfaceGeometry) -> float:
    """|reference Hamiltonian via projection - via mean-curvature gauge|.

    Both sides integrate over the surface measure of sigma; the projected-area
    measure enters through d Sigma_hat = (A / Omega) d Sigma.
    """
    from .sphere import integrate as _int

    grid = geom.grid
    lhs = _int(ScalarField(grid, geom.Hhat.values * geom.A.values), geom.sigma)
    a, b, h0 = geom.A.values, geom.B.values, geom.H0_norm.values
    vt, vp = geom.sigma.raise_form(geom.tau_form)
    om2 = geom.omega.values ** 2
    alpha_term = om2 * (geom.alpha_H0.comp_theta * vt + geom.alpha_H0.comp_phi * vp)
    rhs_density = (np.sqrt(a**2 * h0**2 + b**2) + b * geom.theta.values - alpha_term)
    rhs = _int(ScalarField(grid, rhs_density), geom.sigma)
    return abs(lhs - rhs)
