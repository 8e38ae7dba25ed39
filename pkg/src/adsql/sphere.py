"""Spectral fields and covariant calculus on a topological 2-sphere.

The grid is a Gauss-Legendre x uniform-longitude product grid.  Scalar fields
are represented by their node values (latitude-major arrays of shape
``(ntheta, nphi)``); differentiation goes through a real spherical-harmonic
transform: FFT in the longitude phi, normalized associated-Legendre recurrences
in the colatitude theta.  Gauss-Legendre nodes exclude the poles, so dividing
by sin(theta) is always safe, and quadrature against the round measure is exact
for integrands of polynomial degree <= 2*ntheta - 1.

Tensor components are stored in the coordinate basis (d_theta, d_phi); fields
are expected to come from band-limited data so that pole regularity is
automatic.  All field objects are immutable after construction and every
reduction uses a fixed summation order.

Orientation convention: eps_{theta,phi} = +sqrt(det), used by ``curl`` and by
the angular-momentum charges downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, lpmv, roots_legendre

from .errors import EmbeddingError, GridMismatchError

__all__ = [
    "SphereGrid",
    "ScalarField",
    "OneFormField",
    "SymTensorField",
    "SurfaceMetric",
    "integrate",
    "gradient",
    "raised_gradient",
    "divergence",
    "laplacian",
    "curl",
]


def _normalized_alp(m: int, lmax: int, mu: np.ndarray) -> np.ndarray:
    """Associated Legendre functions P~_{l m}(mu), orthonormal on [-1, 1].

    Returns an array of shape (len(mu), lmax + 1) whose column l is
    sqrt((2l+1)/2 * (l-m)!/(l+m)!) * P_l^m(mu); columns with l < m are zero.
    """
    out = np.zeros((len(mu), lmax + 1))
    for l in range(m, lmax + 1):
        log_norm = 0.5 * (np.log((2 * l + 1) / 2.0) + gammaln(l - m + 1) - gammaln(l + m + 1))
        out[:, l] = np.exp(log_norm) * lpmv(m, l, mu)
    return out


def _alp_theta_derivative(m: int, lmax: int, mu: np.ndarray, pnm: np.ndarray) -> np.ndarray:
    """d/dtheta of the normalized ALPs, via the two-term recurrence.

    dP~_{lm}/dtheta = (l*mu*P~_{lm} - c_{lm}*P~_{l-1,m}) / sin(theta),
    c_{lm} = sqrt((2l+1)(l^2-m^2)/(2l-1)).
    """
    sin_t = np.sqrt(1.0 - mu * mu)
    out = np.zeros_like(pnm)
    for l in range(m, lmax + 1):
        prev = pnm[:, l - 1] if l - 1 >= m else 0.0
        c = np.sqrt((2 * l + 1) * (l * l - m * m) / (2 * l - 1)) if l > 0 else 0.0
        out[:, l] = (l * mu * pnm[:, l] - c * prev) / sin_t
    return out


def _alp_theta_second(m: int, lmax: int, mu: np.ndarray, pnm: np.ndarray,
                      dpnm: np.ndarray) -> np.ndarray:
    """d^2/dtheta^2 of the normalized ALPs.

    d2P~_{lm} = -l*P~_{lm} + ((l-1)*mu*dP~_{lm} - c_{lm}*dP~_{l-1,m}) / sin(theta).
    """
    sin_t = np.sqrt(1.0 - mu * mu)
    out = np.zeros_like(pnm)
    for l in range(m, lmax + 1):
        prev = dpnm[:, l - 1] if l - 1 >= m else 0.0
        c = np.sqrt((2 * l + 1) * (l * l - m * m) / (2 * l - 1)) if l > 0 else 0.0
        out[:, l] = -l * pnm[:, l] + ((l - 1) * mu * dpnm[:, l] - c * prev) / sin_t
    return out


class SphereGrid:
    """Quadrature nodes and spectral transform data for fields on S^2.

    Parameters
    ----------
    lmax : nominal band limit of synthesized data.
    ntheta : Gauss-Legendre colatitude nodes (default lmax + 1).
    nphi : uniform longitude nodes (default 2*lmax + 1).

    The analysis used for differentiation keeps Legendre degrees up to
    ntheta - 1 (always >= lmax), which the Gauss-Legendre rule still treats
    exactly; the coefficient-facing interfaces use the nominal lmax.
    """

    def __init__(self, lmax: int, ntheta: int | None = None, nphi: int | None = None):
        if lmax < 2:
            raise ValueError("lmax must be at least 2")
        self.lmax = int(lmax)
        self.ntheta = int(ntheta) if ntheta is not None else self.lmax + 1
        self.nphi = int(nphi) if nphi is not None else 2 * self.lmax + 1
        if self.ntheta < self.lmax + 1:
            raise ValueError("ntheta must be >= lmax + 1")
        if self.nphi < 2 * self.lmax + 1:
            raise ValueError("nphi must be >= 2*lmax + 1")

        mu, w = roots_legendre(self.ntheta)
        order = np.argsort(-mu)  # north (theta small) first
        self.mu = mu[order]
        self.gl_weights = w[order]
        self.theta = np.arccos(self.mu)
        self.phi = np.linspace(0.0, 2.0 * np.pi, self.nphi, endpoint=False)
        self.sin_theta = np.sin(self.theta)

        # Quadrature weights against the unit round measure; sum to 4*pi.
        self.weights = np.outer(self.gl_weights, np.full(self.nphi, 2.0 * np.pi / self.nphi))

        self._ldeg = self.ntheta - 1  # analysis degree for derivatives
        nm = min(self.lmax, self.nphi // 2)
        self._mmax = nm
        self._pnm = []
        self._dpnm = []
        self._d2pnm = []
        for m in range(self._mmax + 1):
            p = _normalized_alp(m, self._ldeg, self.mu)
            dp = _alp_theta_derivative(m, self._ldeg, self.mu, p)
            self._pnm.append(p)
            self._dpnm.append(dp)
            self._d2pnm.append(_alp_theta_second(m, self._ldeg, self.mu, p, dp))

        for arr in (self.mu, self.gl_weights, self.theta, self.phi, self.sin_theta, self.weights):
            arr.setflags(write=False)

    # -- node helper fields -------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ntheta, self.nphi)

    @property
    def theta_grid(self) -> np.ndarray:
        return np.broadcast_to(self.theta[:, None], self.shape)

    @property
    def phi_grid(self) -> np.ndarray:
        return np.broadcast_to(self.phi[None, :], self.shape)

    def unit_cartesian(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """The l=1 harmonics x~^i = (sin t cos p, sin t sin p, cos t)."""
        st, ct = np.sin(self.theta_grid), np.cos(self.theta_grid)
        return st * np.cos(self.phi_grid), st * np.sin(self.phi_grid), ct + 0.0 * st

    @property
    def nodes(self) -> np.ndarray:
        """All (theta, phi) pairs, latitude-major, shape (ntheta*nphi, 2)."""
        return np.stack([self.theta_grid.ravel(), self.phi_grid.ravel()], axis=1)

    # -- spectral kernels ----------------------------------------------------

    def _fourier(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfft(np.asarray(values, dtype=float), axis=1) / self.nphi

    def _synthesis(self, fourier: np.ndarray) -> np.ndarray:
        return np.fft.irfft(fourier * self.nphi, n=self.nphi, axis=1)

    def dphi(self, values: np.ndarray) -> np.ndarray:
        """Pseudospectral d/dphi at the nodes."""
        g = self._fourier(values)
        m = np.arange(g.shape[1])
        return self._synthesis(1j * m[None, :] * g)

    def dtheta(self, values: np.ndarray) -> np.ndarray:
        """Spectral d/dtheta at the nodes (Legendre recurrence per m)."""
        g = self._fourier(values)
        out = np.zeros_like(g)
        wg = self.gl_weights
        for m in range(self._mmax + 1):
            coeff = self._pnm[m].T @ (wg * g[:, m])
            out[:, m] = self._dpnm[m] @ coeff
        return self._synthesis(out)

    def d2theta(self, values: np.ndarray) -> np.ndarray:
        """Spectral d^2/dtheta^2 at the nodes.

        Exact for band-limited scalars; chaining ``dtheta`` twice is not, since
        the first derivative of a scalar leaves the scalar harmonic span.
        """
        g = self._fourier(values)
        out = np.zeros_like(g)
        wg = self.gl_weights
        for m in range(self._mmax + 1):
            coeff = self._pnm[m].T @ (wg * g[:, m])
            out[:, m] = self._d2pnm[m] @ coeff
        return self._synthesis(out)

    def hessian_components(self, values: np.ndarray):
        """Coordinate second partials (f_tt, f_tp, f_pp) of a scalar field."""
        ft = self.dtheta(values)
        return self.d2theta(values), self.dphi(ft), self.dphi(self.dphi(values))

    def project(self, values: np.ndarray) -> np.ndarray:
        """Band-limit node values to degrees <= ntheta - 1, m <= lmax."""
        g = self._fourier(values)
        out = np.zeros_like(g)
        wg = self.gl_weights
        for m in range(self._mmax + 1):
            coeff = self._pnm[m].T @ (wg * g[:, m])
            out[:, m] = self._pnm[m] @ coeff
        return self._synthesis(out)

    # -- real harmonic basis (synthesis from coefficients) --------------------

    def _real_basis_tables(self):
        """Values and theta/phi derivatives of the real orthonormal basis.

        Basis ordering: (l, m=0), then (l, m, cos), (l, m, sin) for m >= 1;
        normalization is orthonormal against the unit round measure.
        Shapes: (nmodes, ntheta, nphi).
        """
        if not hasattr(self, "_basis_cache"):
            n = (self.lmax + 1) ** 2
            val = np.zeros((n, self.ntheta, self.nphi))
            dth = np.zeros_like(val)
            dph = np.zeros_like(val)
            labels = []
            cos_m = {m: np.cos(m * self.phi) for m in range(self.lmax + 1)}
            sin_m = {m: np.sin(m * self.phi) for m in range(self.lmax + 1)}
            idx = 0
            for l in range(self.lmax + 1):
                for m in range(0, l + 1):
                    p = self._pnm[m][:, l] / np.sqrt(2.0 * np.pi)
                    dp = self._dpnm[m][:, l] / np.sqrt(2.0 * np.pi)
                    if m == 0:
                        val[idx] = p[:, None]
                        dth[idx] = dp[:, None]
                        labels.append((l, 0, "c"))
                        idx += 1
                    else:
                        for kind in ("c", "s"):
                            az = cos_m[m] if kind == "c" else sin_m[m]
                            daz = -m * sin_m[m] if kind == "c" else m * cos_m[m]
                            val[idx] = np.sqrt(2.0) * p[:, None] * az[None, :]
                            dth[idx] = np.sqrt(2.0) * dp[:, None] * az[None, :]
                            dph[idx] = np.sqrt(2.0) * p[:, None] * daz[None, :]
                            labels.append((l, m, kind))
                            idx += 1
            self._basis_cache = (val, dth, dph, labels)
        return self._basis_cache

    @property
    def n_modes(self) -> int:
        return (self.lmax + 1) ** 2

    def basis_values(self) -> np.ndarray:
        return self._real_basis_tables()[0]

    def basis_dtheta(self) -> np.ndarray:
        return self._real_basis_tables()[1]

    def basis_dphi(self) -> np.ndarray:
        return self._real_basis_tables()[2]

    def basis_degrees(self) -> np.ndarray:
        return np.array([l for (l, _, _) in self._real_basis_tables()[3]])

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Node values of sum_k coeffs[k] * basis_k."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_modes,):
            raise ValueError(f"expected {self.n_modes} coefficients")
        return np.tensordot(coeffs, self.basis_values(), axes=(0, 0))

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of the real basis (exact for band-limited input)."""
        wv = self.weights * np.asarray(values, dtype=float)
        return np.tensordot(self.basis_values(), wv, axes=([1, 2], [0, 1]))

    def random_field(self, rng: np.random.Generator, scale: float = 1.0,
                     lcap: int | None = None) -> np.ndarray:
        """Random band-limited node values with a mild 1/(1+l)^2 spectral decay."""
        deg = self.basis_degrees()
        c = rng.standard_normal(self.n_modes) * scale / (1.0 + deg) ** 2
        if lcap is not None:
            c[deg > lcap] = 0.0
        return self.synthesize(c)

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


# ---------------------------------------------------------------------------
# Field containers
# ---------------------------------------------------------------------------


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.setflags(write=False)
    return a


def _require_same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid is not g:
            raise GridMismatchError("fields live on different grids")
    return g


@dataclass(frozen=True)
class ScalarField:
    """A scalar field by its node values, shape (ntheta, nphi)."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = _freeze(self.values)
        if v.shape != self.grid.shape:
            raise GridMismatchError(f"scalar values must have shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: SphereGrid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))

    def __add__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values - o)

    def __rsub__(self, other):
        return ScalarField(self.grid, other - self.values)

    def __mul__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return ScalarField(self.grid, self.values / o)

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_json_dict(self) -> dict:
        return _field_json(self.grid, ["value"], [self.values])

    @classmethod
    def from_json_dict(cls, data: dict, grid: SphereGrid | None = None) -> "ScalarField":
        grid, comps = _field_unjson(data, ["value"], grid)
        return cls(grid, comps[0])


@dataclass(frozen=True)
class OneFormField:
    """A one-form by its (theta, phi) covariant components."""

    grid: SphereGrid
    comp_theta: np.ndarray
    comp_phi: np.ndarray

    def __post_init__(self):
        for name in ("comp_theta", "comp_phi"):
            v = _freeze(getattr(self, name))
            if v.shape != self.grid.shape:
                raise GridMismatchError(f"one-form components must have shape {self.grid.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError("one-form field contains non-finite values")
            object.__setattr__(self, name, v)

    @classmethod
    def zero(cls, grid: SphereGrid) -> "OneFormField":
        z = np.zeros(grid.shape)
        return cls(grid, z, z.copy())

    def stack(self) -> np.ndarray:
        """Components as one array of shape (2, ntheta, nphi)."""
        return np.stack([self.comp_theta, self.comp_phi])

    def __add__(self, other):
        return OneFormField(self.grid, self.comp_theta + other.comp_theta,
                            self.comp_phi + other.comp_phi)

    def __sub__(self, other):
        return OneFormField(self.grid, self.comp_theta - other.comp_theta,
                            self.comp_phi - other.comp_phi)

    def __mul__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return OneFormField(self.grid, self.comp_theta * o, self.comp_phi * o)

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.comp_theta)), np.max(np.abs(self.comp_phi))))

    def to_json_dict(self) -> dict:
        return _field_json(self.grid, ["theta", "phi"], [self.comp_theta, self.comp_phi])

    @classmethod
    def from_json_dict(cls, data: dict, grid: SphereGrid | None = None) -> "OneFormField":
        grid, comps = _field_unjson(data, ["theta", "phi"], grid)
        return cls(grid, *comps)


@dataclass(frozen=True)
class SymTensorField:
    """A symmetric 2-tensor by its (theta-theta, theta-phi, phi-phi) components."""

    grid: SphereGrid
    tt: np.ndarray
    tp: np.ndarray
    pp: np.ndarray

    def __post_init__(self):
        for name in ("tt", "tp", "pp"):
            v = _freeze(getattr(self, name))
            if v.shape != self.grid.shape:
                raise GridMismatchError(f"tensor components must have shape {self.grid.shape}")
            if not np.all(np.isfinite(v)):
                raise ValueError("tensor field contains non-finite values")
            object.__setattr__(self, name, v)

    @classmethod
    def zero(cls, grid: SphereGrid) -> "SymTensorField":
        z = np.zeros(grid.shape)
        return cls(grid, z, z.copy(), z.copy())

    def matrix(self) -> np.ndarray:
        """Dense component matrix, shape (ntheta, nphi, 2, 2)."""
        m = np.empty(self.grid.shape + (2, 2))
        m[..., 0, 0] = self.tt
        m[..., 0, 1] = self.tp
        m[..., 1, 0] = self.tp
        m[..., 1, 1] = self.pp
        return m

    def det(self) -> np.ndarray:
        return self.tt * self.pp - self.tp**2

    def __add__(self, other):
        return SymTensorField(self.grid, self.tt + other.tt, self.tp + other.tp,
                              self.pp + other.pp)

    def __sub__(self, other):
        return SymTensorField(self.grid, self.tt - other.tt, self.tp - other.tp,
                              self.pp - other.pp)

    def __mul__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return SymTensorField(self.grid, self.tt * o, self.tp * o, self.pp * o)

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(c)) for c in (self.tt, self.tp, self.pp)))

    def to_json_dict(self) -> dict:
        return _field_json(self.grid, ["tt", "tp", "pp"], [self.tt, self.tp, self.pp])

    @classmethod
    def from_json_dict(cls, data: dict, grid: SphereGrid | None = None) -> "SymTensorField":
        grid, comps = _field_unjson(data, ["tt", "tp", "pp"], grid)
        return cls(grid, *comps)


class SurfaceMetric:
    """A Riemannian metric on the sphere with cached determinant and inverse."""

    def __init__(self, g: SymTensorField):
        self.g = g
        self.grid = g.grid
        det = g.det()
        if np.any(det <= 0.0) or np.any(g.tt <= 0.0):
            raise EmbeddingError("metric is not Riemannian (det or g_tt <= 0)")
        self.det = det
        self.sqrt_det = np.sqrt(det)
        self.inv_tt = g.pp / det
        self.inv_tp = -g.tp / det
        self.inv_pp = g.tt / det
        for a in (self.det, self.sqrt_det, self.inv_tt, self.inv_tp, self.inv_pp):
            a.setflags(write=False)

    @classmethod
    def round_sphere(cls, grid: SphereGrid, radius: float = 1.0) -> "SurfaceMetric":
        st2 = np.broadcast_to((grid.sin_theta**2)[:, None], grid.shape).copy()
        r2 = radius**2
        return cls(SymTensorField(grid, np.full(grid.shape, r2), np.zeros(grid.shape), r2 * st2))

    def inv(self) -> SymTensorField:
        return SymTensorField(self.grid, self.inv_tt, self.inv_tp, self.inv_pp)

    def raise_form(self, w: OneFormField) -> tuple[np.ndarray, np.ndarray]:
        """Vector components (v^theta, v^phi) of the metric-raised one-form."""
        vt = self.inv_tt * w.comp_theta + self.inv_tp * w.comp_phi
        vp = self.inv_tp * w.comp_theta + self.inv_pp * w.comp_phi
        return vt, vp

    def inner(self, a: OneFormField, b: OneFormField) -> np.ndarray:
        """Pointwise metric inner product of two one-forms."""
        return (self.inv_tt * a.comp_theta * b.comp_theta
                + self.inv_tp * (a.comp_theta * b.comp_phi + a.comp_phi * b.comp_theta)
                + self.inv_pp * a.comp_phi * b.comp_phi)

    def norm2_form(self, a: OneFormField) -> np.ndarray:
        return self.inner(a, a)

    def inverse_identity_error(self) -> float:
        """Relative sup error of g . inv - id (construction self-check)."""
        e1 = self.g.tt * self.inv_tt + self.g.tp * self.inv_tp - 1.0
        e2 = self.g.tt * self.inv_tp + self.g.tp * self.inv_pp
        e3 = self.g.tp * self.inv_tp + self.g.pp * self.inv_pp - 1.0
        return float(max(np.max(np.abs(e)) for e in (e1, e2, e3)))


# ---------------------------------------------------------------------------
# Covariant calculus
# ---------------------------------------------------------------------------


def integrate(f: ScalarField, metric: SurfaceMetric) -> float:
    """Integral of f against the area measure of ``metric``.

    Exact for band-limited integrands: the quadrature weights carry the round
    measure and the nodewise factor sqrt(det g)/sin(theta) converts to the
    target one.  Fixed summation order for reproducibility.
    """
    grid = _require_same_grid(f, metric)
    density = metric.sqrt_det / grid.sin_theta[:, None]
    return float(np.sum((grid.weights * f.values * density).ravel()))


def gradient(f: ScalarField, metric: SurfaceMetric | None = None) -> OneFormField:
    """Covariant differential df (components are plain partial derivatives)."""
    grid = f.grid
    if metric is not None:
        _require_same_grid(f, metric)
    return OneFormField(grid, grid.dtheta(f.values), grid.dphi(f.values))


def raised_gradient(f: ScalarField, metric: SurfaceMetric) -> tuple[np.ndarray, np.ndarray]:
    """Vector components of grad f with the index raised by ``metric``."""
    return metric.raise_form(gradient(f, metric))


def divergence(w: OneFormField, metric: SurfaceMetric) -> ScalarField:
    """div w = (1/sqrt(det)) d_a (sqrt(det) w^a) for the raised one-form."""
    grid = _require_same_grid(w, metric)
    vt, vp = metric.raise_form(w)
    s = metric.sqrt_det
    out = (grid.dtheta(s * vt) + grid.dphi(s * vp)) / s
    return ScalarField(grid, out)


def divergence_vector(vt: np.ndarray, vp: np.ndarray, metric: SurfaceMetric) -> np.ndarray:
    """Divergence of a vector field given by raised components."""
    grid = metric.grid
    s = metric.sqrt_det
    return (grid.dtheta(s * vt) + grid.dphi(s * vp)) / s


def laplacian(f: ScalarField, metric: SurfaceMetric) -> ScalarField:
    return divergence(gradient(f, metric), metric)


def curl(w: OneFormField, metric: SurfaceMetric) -> ScalarField:
    """eps^{ab} nabla_a w_b with eps_{theta,phi} = +sqrt(det)."""
    grid = _require_same_grid(w, metric)
    out = (grid.dtheta(w.comp_phi) - grid.dphi(w.comp_theta)) / metric.sqrt_det
    return ScalarField(grid, out)


def form_component_cartesian(grid: SphereGrid, wx: np.ndarray, wy: np.ndarray,
                             wz: np.ndarray) -> OneFormField:
    """One-form w_a = w_i d_a x~^i from Cartesian components on the unit sphere."""
    st, ct = np.sin(grid.theta_grid), np.cos(grid.theta_grid)
    sp, cp = np.sin(grid.phi_grid), np.cos(grid.phi_grid)
    # d_theta x~ = (ct cp, ct sp, -st); d_phi x~ = (-st sp, st cp, 0)
    w_t = wx * ct * cp + wy * ct * sp - wz * st
    w_p = -wx * st * sp + wy * st * cp
    return OneFormField(grid, w_t, w_p)


def _field_json(grid: SphereGrid, names: list[str], comps: list[np.ndarray]) -> dict:
    return {
        "lmax": grid.lmax,
        "ntheta": grid.ntheta,
        "nphi": grid.nphi,
        "component_names": list(names),
        "values": [np.asarray(c).ravel().tolist() for c in comps],
    }


def _field_unjson(data: dict, names: list[str], grid: SphereGrid | None):
    if grid is None:
        grid = SphereGrid(data["lmax"], data["ntheta"], data["nphi"])
    elif (grid.lmax, grid.ntheta, grid.nphi) != (data["lmax"], data["ntheta"], data["nphi"]):
        raise GridMismatchError("serialized field does not match the provided grid")
    if list(data["component_names"]) != names:
        raise ValueError(f"expected components {names}, got {data['component_names']}")
    comps = [np.asarray(v, dtype=float).reshape(grid.shape) for v in data["values"]]
    return grid, comps
