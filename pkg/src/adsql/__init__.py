"""adsql: quasi-local energy and conserved charges with an AdS/dS reference.

A spectral toolkit for closed spacelike 2-surfaces: covariant calculus on the
sphere, the static dS/AdS reference geometry with its projection identities
and conservation law, the quasi-local energy functional with its first and
second variations, isometric embedding into the hyperbolic slice, observer
optimization, and the ten total charges of asymptotically AdS data together
with their evolution and rest mass.
"""

__version__ = "0.1.0"

from .sphere import (
    SphereGrid,
    ScalarField,
    OneFormField,
    SymTensorField,
    SurfaceMetric,
    integrate,
    gradient,
    divergence,
    laplacian,
    curl,
)
from .reference import (
    ReferenceChart,
    static_chart,
    KillingField,
    killing_basis,
    AdSIsometry,
    EmbeddingMap,
    round_sphere_embedding,
    graph_over_sphere,
    ReferenceSurfaceGeometry,
    surface_geometry,
    projection_residuals,
    conservation_residual,
)
from .surfaces import (
    PhysicalSurfaceData,
    AsymptoticData,
    EvolutionConfig,
    sads_sphere,
    perturbed_data,
    image_data,
    SadsModel,
    CustomModel,
    extract_asymptotics,
)
from .energy import (
    Observer,
    DensityPair,
    quasilocal_energy,
    density_pair,
    conserved_quantity,
    optimal_embedding_residual,
    second_variation_form,
)
from .embedding import (
    EmbeddingSolution,
    embed_round,
    embed_newton,
    optimize_observer,
)
from .charges import (
    ChargeSet,
    RestMass,
    total_charges,
    hamiltonian_charges,
    quasilocal_limit,
    evolve_charges,
    evolve_charges_rk4,
    rest_mass,
)

__all__ = [name for name in dir() if not name.startswith("_")]
