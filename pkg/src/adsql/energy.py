"""Quasi-local energy, conserved quantities, and its first/second variations.

The energy of physical data (sigma, |H|, alpha_H) with respect to an embedding
X into the reference spacetime and an observer T0 is the difference of a
reference and a physical surface Hamiltonian:

    8 pi E = int Omega Hhat dShat
             - int [ sqrt(A^2 |H|^2 + B^2) - B asinh(B / (A |H|))
                     - Omega^2 alpha_H(grad tau) ] dS,

with A = Omega sqrt(1 + Omega^2 |grad tau|^2) and B = div(Omega^2 grad tau).
For observers other than the chart time axis the same quantity is evaluated in
the chart-free form, which needs only the tangential/normal split of T0 along
the image surface; for observers in the strict isometry orbit of the time axis
the two routes agree and the conjugating isometry is applied instead.

The energy density rho is computed through its conjugate expression

    rho = (|H0|^2 - |H|^2) / (sqrt(A^2 |H0|^2 + B^2) + sqrt(A^2 |H|^2 + B^2)),

which avoids the catastrophic cancellation of the textbook difference of
square roots when |H| ~ |H0|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ObserverError, PreconditionError
from .reference import (
    EmbeddingMap,
    KillingField,
    ReferenceChart,
    ReferenceSurfaceGeometry,
    conjugate_to_time,
    surface_geometry,
)
from .sphere import (
    OneFormField,
    ScalarField,
    divergence,
    divergence_vector,
    gradient,
    integrate,
)
from .surfaces import PhysicalSurfaceData

__all__ = [
    "Observer",
    "DensityPair",
    "quasilocal_energy",
    "density_pair",
    "conserved_quantity",
    "optimal_embedding_residual",
    "second_variation_form",
    "isometry_mismatch",
]

EIGHT_PI = 8.0 * np.pi

DEFAULT_ISO_TOL = 1e-8


@dataclass(frozen=True)
class Observer:
    """A future timelike Killing field used as the energy reference frame."""

    field: KillingField

    @classmethod
    def time_axis(cls, chart: ReferenceChart) -> "Observer":
        return cls(KillingField.from_label(chart, "time"))

    @classmethod
    def from_coefficients(cls, chart: ReferenceChart, A=1.0, B=(0, 0, 0), D=(0, 0, 0),
                          F=(0, 0, 0)) -> "Observer":
        return cls(KillingField.combination(chart, A, B, D, F))

    @property
    def is_time_axis(self) -> bool:
        return self.field.coeffs == (1.0,) + (0.0,) * 9


@dataclass(frozen=True)
class DensityPair:
    """Energy density rho and momentum density one-form j."""

    rho: ScalarField
    j: OneFormField


def isometry_mismatch(data: PhysicalSurfaceData, geom: ReferenceSurfaceGeometry) -> float:
    """Nodewise relative sup mismatch between data.sigma and the pullback."""
    d = geom.sigma.g - data.sigma.g
    scale = np.sqrt(data.sigma.g.tt**2 + 2.0 * data.sigma.g.tp**2 + data.sigma.g.pp**2)
    rel = np.stack([np.abs(d.tt), np.abs(d.tp), np.abs(d.pp)]) / scale
    return float(np.max(rel))


def _require_isometric(data, geom, tol):
    mismatch = isometry_mismatch(data, geom)
    if mismatch > tol:
        raise PreconditionError(
            f"embedding is not isometric for the data (mismatch {mismatch:.3e} > {tol:.1e})")


def _observer_split(geom: ReferenceSurfaceGeometry, kf: KillingField):
    """(-<K_perp, K_perp>, raised tangential components, K values) along the surface."""
    X = geom.embedding
    kvals = kf.eval(X.tau.values, X.spatial())
    g4 = geom.chart.metric4(X.spatial())
    k_dot_e = [np.einsum("...uv,...u,...v->...", g4, kvals, geom.tangents[a])
               for a in range(2)]
    kt = geom.sigma.inv_tt * k_dot_e[0] + geom.sigma.inv_tp * k_dot_e[1]
    kp = geom.sigma.inv_tp * k_dot_e[0] + geom.sigma.inv_pp * k_dot_e[1]
    norm_tan = kt * k_dot_e[0] + kp * k_dot_e[1]
    norm_full = np.einsum("...uv,...u,...v->...", g4, kvals, kvals)
    u = -(norm_full - norm_tan)
    return u, (kt, kp), kvals, k_dot_e


def _hamiltonian_density(u, div_t, h, alpha_of_t):
    """sqrt(u h^2 + d^2) - d asinh(d/(h sqrt(u))) + alpha(K_tan), nodewise."""
    root = np.sqrt(u * h * h + div_t * div_t)
    return root - div_t * np.arcsinh(div_t / (h * np.sqrt(u))) + alpha_of_t


def _chart_energy(data: PhysicalSurfaceData, geom: ReferenceSurfaceGeometry) -> float:
    grid = geom.grid
    a, b = geom.A.values, geom.B.values
    h = data.h_norm.values
    vt, vp = geom.sigma.raise_form(geom.tau_form)
    om2 = geom.omega.values ** 2
    alpha_term = om2 * (data.alpha.comp_theta * vt + data.alpha.comp_phi * vp)
    phys = np.sqrt(a * a * h * h + b * b) - b * np.arcsinh(b / (a * h)) - alpha_term
    ref = geom.Hhat.values * a
    return (integrate(ScalarField(grid, ref), geom.sigma)
            - integrate(ScalarField(grid, phys), geom.sigma)) / EIGHT_PI


def _invariant_energy(data: PhysicalSurfaceData, geom: ReferenceSurfaceGeometry,
                      kf: KillingField) -> float:
    grid = geom.grid
    u, (kt, kp), _, _ = _observer_split(geom, kf)
    if np.any(u <= 0.0):
        raise ObserverError("observer is not timelike along the surface")
    div_t = divergence_vector(kt, kp, geom.sigma)
    alpha_ref = geom.alpha_H0.comp_theta * kt + geom.alpha_H0.comp_phi * kp
    alpha_phys = data.alpha.comp_theta * kt + data.alpha.comp_phi * kp
    ref = _hamiltonian_density(u, div_t, geom.H0_norm.values, alpha_ref)
    phys = _hamiltonian_density(u, div_t, data.h_norm.values, alpha_phys)
    return integrate(ScalarField(grid, ref - phys), geom.sigma) / EIGHT_PI


def _reduce_observer(X: EmbeddingMap, T0: Observer):
    """Rotate the chart so the observer becomes the time axis.

    Returns the transformed embedding and the isometry used (identity for the
    time axis itself).
    """
    if T0.is_time_axis:
        return X, None
    iso = conjugate_to_time(T0.field)
    return X.transform(iso.inverse()), iso


def quasilocal_energy(data: PhysicalSurfaceData, X: EmbeddingMap, chart: ReferenceChart,
                      T0: Observer | None = None, iso_tol: float = DEFAULT_ISO_TOL,
                      geom: ReferenceSurfaceGeometry | None = None) -> float:
    """Energy of the data with respect to (X, T0).

    T0 defaults to the chart time axis.  Observers in the strict isometry
    orbit of the time axis are handled by applying the conjugating isometry;
    other future-timelike Killing observers are evaluated in the chart-free
    form.  Precondition: X embeds data.sigma isometrically within iso_tol.
    """
    if geom is None:
        geom = surface_geometry(X, chart)
    _require_isometric(data, geom, iso_tol)
    if np.any(data.h_norm.values <= 0.0):
        raise DegenerateDataError("|H| must be positive")
    if T0 is None or T0.is_time_axis:
        return _chart_energy(data, geom)
    try:
        x_red, _ = _reduce_observer(X, T0)
    except ObserverError:
        return _invariant_energy(data, geom, T0.field)
    return _chart_energy(data, surface_geometry(x_red, chart))


def density_pair(data: PhysicalSurfaceData, X: EmbeddingMap, chart: ReferenceChart,
                 iso_tol: float = DEFAULT_ISO_TOL,
                 geom: ReferenceSurfaceGeometry | None = None) -> DensityPair:
    """Energy density rho and momentum density j of (data, X, time axis)."""
    if geom is None:
        geom = surface_geometry(X, chart)
    _require_isometric(data, geom, iso_tol)
    grid = geom.grid
    rho = _rho(data, geom)
    psi = _asinh_term(data, geom, rho)
    om2 = geom.omega.values ** 2
    dpsi = gradient(ScalarField(grid, psi))
    j_t = (rho * om2 * geom.tau_form.comp_theta - dpsi.comp_theta
           - geom.alpha_H0.comp_theta + data.alpha.comp_theta)
    j_p = (rho * om2 * geom.tau_form.comp_phi - dpsi.comp_phi
           - geom.alpha_H0.comp_phi + data.alpha.comp_phi)
    return DensityPair(rho=ScalarField(grid, rho), j=OneFormField(grid, j_t, j_p))


def _rho(data: PhysicalSurfaceData, geom: ReferenceSurfaceGeometry) -> np.ndarray:
    a, b = geom.A.values, geom.B.values
    h0, h = geom.H0_norm.values, data.h_norm.values
    denom = np.sqrt(a * a * h0 * h0 + b * b) + np.sqrt(a * a * h * h + b * b)
    return (h0 * h0 - h * h) / denom


def _asinh_term(data, geom, rho) -> np.ndarray:
    return np.arcsinh(rho * geom.B.values / (geom.H0_norm.values * data.h_norm.values))


def conserved_quantity(data: PhysicalSurfaceData, X: EmbeddingMap, chart: ReferenceChart,
                       T0: Observer, K: KillingField,
                       iso_tol: float = DEFAULT_ISO_TOL) -> float:
    """Quasi-local conserved quantity -(1/8pi) int [<K, T0> rho + j(K_tan)] dS.

    T0 must lie in the strict isometry orbit of the time axis; the conjugating
    isometry is applied to the embedding and to K before evaluating.
    """
    x_red, iso = _reduce_observer(X, T0)
    k_red = K if iso is None else iso.inverse().apply_killing(K)
    geom = surface_geometry(x_red, chart)
    _require_isometric(data, geom, iso_tol)
    dens = density_pair(data, x_red, chart, iso_tol=iso_tol, geom=geom)
    _, (kt, kp), kvals, _ = _observer_split(geom, k_red)
    k_dot_t0 = -(geom.omega.values ** 2) * kvals[..., 0]  # <K, d_t> = -Omega^2 K^t
    integrand = k_dot_t0 * dens.rho.values + dens.j.comp_theta * kt + dens.j.comp_phi * kp
    return -integrate(ScalarField(geom.grid, integrand), geom.sigma) / EIGHT_PI


def optimal_embedding_residual(data: PhysicalSurfaceData, X: EmbeddingMap,
                               chart: ReferenceChart, iso_tol: float = DEFAULT_ISO_TOL,
                               geom: ReferenceSurfaceGeometry | None = None):
    """The two Euler-Lagrange residual fields of the energy at (data, X).

    res_tau pairs with variations of the time function, res_x with the static
    potential component of spatial variations:

        8 pi dE = int [ res_tau * dtau + res_x * (dX^i grad_i Omega) ] dS.

    Both vanish identically iff X is a critical point among variations obeying
    the linearized isometric embedding constraint.
    """
    if geom is None:
        geom = surface_geometry(X, chart)
    _require_isometric(data, geom, iso_tol)
    grid = geom.grid
    om = geom.omega.values
    om2 = om * om
    rho = _rho(data, geom)
    psi = _asinh_term(data, geom, rho)
    dpsi = gradient(ScalarField(grid, psi))
    dalpha = geom.alpha_H0 - data.alpha

    w_t = om2 * dpsi.comp_theta - rho * om2 * om2 * geom.tau_form.comp_theta + om2 * dalpha.comp_theta
    w_p = om2 * dpsi.comp_phi - rho * om2 * om2 * geom.tau_form.comp_phi + om2 * dalpha.comp_phi
    res_tau = divergence(OneFormField(grid, w_t, w_p), geom.sigma)

    vt, vp = geom.sigma.raise_form(geom.tau_form)
    grad_pair = vt * dpsi.comp_theta + vp * dpsi.comp_phi
    alpha_pair = dalpha.comp_theta * vt + dalpha.comp_phi * vp
    res_x = (rho * om * (1.0 + 2.0 * om2 * geom.grad_tau_sq.values)
             - 2.0 * om * grad_pair - 2.0 * om * alpha_pair)
    return res_tau, ScalarField(grid, res_x)


def energy_report(data: PhysicalSurfaceData, X: EmbeddingMap, chart: ReferenceChart,
                  iso_tol: float = DEFAULT_ISO_TOL) -> dict:
    """JSON-ready record {E, rho_stats, j_stats, residual_norms} for (data, X)."""
    geom = surface_geometry(X, chart)
    e = quasilocal_energy(data, X, chart, iso_tol=iso_tol, geom=geom)
    dens = density_pair(data, X, chart, iso_tol=iso_tol, geom=geom)
    res_tau, res_x = optimal_embedding_residual(data, X, chart, iso_tol=iso_tol,
                                                geom=geom)
    area = integrate(ScalarField.constant(X.grid, 1.0), geom.sigma)
    return {
        "E": e,
        "rho_stats": {
            "min": float(np.min(dens.rho.values)),
            "max": float(np.max(dens.rho.values)),
            "mean": integrate(dens.rho, geom.sigma) / area,
        },
        "j_stats": {"sup": dens.j.sup_norm()},
        "residual_norms": {"res_tau_sup": res_tau.sup_norm(),
                           "res_x_sup": res_x.sup_norm()},
    }


class FirstVariationProbe:
    """Finite-difference check of the first-variation residual pairing.

    Variations must satisfy the linearized isometric constraint at X; along
    the probe each stencil point is corrected back onto the exactly isometric
    family (spatial re-solve at fixed tau, frozen-Jacobian iterations), since
    the variational formula holds only along isometric families.
    """

    def __init__(self, data: PhysicalSurfaceData, X: EmbeddingMap, chart: ReferenceChart,
                 iso_tol: float = DEFAULT_ISO_TOL, probe_tol: float = 1e-5):
        from .embedding import isometric_constraint_operator

        self.data = data
        self.X = X
        self.chart = chart
        self.iso_tol = iso_tol
        self.probe_tol = probe_tol  # stencil points sit at the spectral floor
        self.grid = X.grid
        self.geom = surface_geometry(X, chart)
        _require_isometric(data, self.geom, iso_tol)
        self.res_tau, self.res_x = optimal_embedding_residual(data, X, chart,
                                                              geom=self.geom)
        n_modes = self.grid.n_modes
        oper = isometric_constraint_operator(X, chart)
        self._spatial_pinv = np.linalg.pinv(oper[:, n_modes:], rcond=1e-10)
        self._sigma_flat = np.concatenate([data.sigma.g.tt.ravel(),
                                           data.sigma.g.tp.ravel(),
                                           data.sigma.g.pp.ravel()])
        self._scale = float(np.max(np.abs(self._sigma_flat)))

    def pairing(self, dtau: np.ndarray, dx: np.ndarray) -> float:
        """(1/8pi) int [res_tau dtau + res_x dX^i grad_i Omega] dS."""
        dom = self.chart.omega_grad(self.X.spatial())
        dx_omega = np.einsum("...i,...i->...", dx, dom)
        return integrate(ScalarField(self.grid, self.res_tau.values * dtau
                                     + self.res_x.values * dx_omega),
                         self.geom.sigma) / EIGHT_PI

    def _corrected_energy(self, dtau, dx, s) -> float:
        from .reference import pullback_metric

        grid = self.grid
        tau_s = ScalarField(grid, self.X.tau.values + s * dtau)
        y = self.X.spatial() + s * dx
        emb = EmbeddingMap(tau_s, *(ScalarField(grid, y[..., i]) for i in range(3)))
        for _ in range(6):
            pull = pullback_metric(emb, self.chart)
            r = np.concatenate([pull.tt.ravel(), pull.tp.ravel(), pull.pp.ravel()])
            r -= self._sigma_flat
            if np.max(np.abs(r)) <= 1e-12 * self._scale:
                break
            corr = self._spatial_pinv @ r
            n_modes = grid.n_modes
            y = emb.spatial() - np.stack(
                [grid.synthesize(corr[i * n_modes:(i + 1) * n_modes]) for i in range(3)],
                axis=-1)
            emb = EmbeddingMap(tau_s, *(ScalarField(grid, y[..., i]) for i in range(3)))
        return quasilocal_energy(self.data, emb, self.chart, iso_tol=self.probe_tol)

    def finite_difference(self, dtau: np.ndarray, dx: np.ndarray,
                          step: float = 1e-3) -> float:
        """Fourth-order central dE/ds along the corrected isometric family."""
        e = {s: self._corrected_energy(dtau, dx, s * step) for s in (-2, -1, 1, 2)}
        return (8.0 * (e[1] - e[-1]) - (e[2] - e[-2])) / (12.0 * step)


def first_variation_pairing(data: PhysicalSurfaceData, X: EmbeddingMap,
                            chart: ReferenceChart, dtau: np.ndarray, dx: np.ndarray,
                            step: float = 1e-3, iso_tol: float = DEFAULT_ISO_TOL):
    """(finite-difference dE/ds, residual pairing) along one constrained variation."""
    probe = FirstVariationProbe(data, X, chart, iso_tol=iso_tol)
    return probe.finite_difference(dtau, dx, step), probe.pairing(dtau, dx)


def second_variation_form(geom: ReferenceSurfaceGeometry, f: ScalarField) -> float:
    """The quadratic form governing the second variation at a static-slice surface.

    Q(f) = int [ (div Omega^2 grad f)^2 / (H0 Omega) - Omega^3 h^{ab} f_a f_b
                 + Omega^2 |grad f|^2 e3(Omega) ] dS,

    which is 8 pi (d^2/ds^2) E along the isometric family with dtau/ds = f.
    Requires tau = 0 and a convex surface.
    """
    if not geom.is_time_symmetric(1e-10):
        raise PreconditionError("second variation form needs a static-slice surface")
    if geom.convexity_margin() <= 0.0:
        raise PreconditionError("surface is not convex")
    grid = geom.grid
    om = geom.omega.values
    df = gradient(f, geom.sigma)
    vt, vp = geom.sigma.raise_form(df)
    b_f = divergence(OneFormField(grid, om**2 * df.comp_theta, om**2 * df.comp_phi),
                     geom.sigma)
    h_grad = (geom.hhat.tt * vt * vt + 2.0 * geom.hhat.tp * vt * vp
              + geom.hhat.pp * vp * vp)
    grad2 = df.comp_theta * vt + df.comp_phi * vp
    integrand = (b_f.values**2 / (geom.H0_norm.values * om)
                 - om**3 * h_grad + om**2 * grad2 * geom.e3_omega.values)
    return integrate(ScalarField(grid, integrand), geom.sigma)
