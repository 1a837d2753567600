"""Self-similar p-Laplacian diffusions: closed forms, SDE and PDE solvers.

The package is organized around the compactly supported self-similar
solution of the parabolic p-Laplace equation (p > 2):

- :mod:`barenblatt.core` -- parameter derivation and closed-form fields
  (density, gradient, diffusion coefficient, radial drift).
- :mod:`barenblatt.sde` -- tamed Euler-Maruyama particle simulation of the
  associated nonlinear diffusion process, with counter-based streams.
- :mod:`barenblatt.pde` -- explicit radial finite-volume solvers for the
  nonlinear equation and its frozen-coefficient linearization.
- :mod:`barenblatt.verify` -- weak-form, integrability, flow-property and
  distributional checks with machine-readable reports.
- :mod:`barenblatt.stats` -- KS/chi-square helpers used by the checks.
"""
from .core import (
    BarenblattParams,
    CoefficientField,
    c1_closed_form,
    check_exponents,
    density,
    density_radial,
    derive_params,
    diffusion_a,
    diffusion_a_radial,
    drift_b,
    drift_radial_coef,
    gradient,
    gradient_radial_mag,
    radial_mass,
    radial_mass_density,
    sphere_area,
    support_radius,
    unit_time_mass,
)
from .numerics import NumericsError, RadialCdf, RngStream, sample_barenblatt

__version__ = "0.1.0"

__all__ = [
    "BarenblattParams",
    "CoefficientField",
    "NumericsError",
    "RadialCdf",
    "RngStream",
    "__version__",
    "c1_closed_form",
    "check_exponents",
    "density",
    "density_radial",
    "derive_params",
    "diffusion_a",
    "diffusion_a_radial",
    "drift_b",
    "drift_radial_coef",
    "gradient",
    "gradient_radial_mag",
    "radial_mass",
    "radial_mass_density",
    "sample_barenblatt",
    "sphere_area",
    "support_radius",
    "unit_time_mass",
]
