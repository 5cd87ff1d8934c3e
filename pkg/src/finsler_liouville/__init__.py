"""Finsler norms, Wulff geometry and the classified solutions of the
anisotropic singular Liouville equation −Q_N u = F̂°(x)^{-β} e^u."""
from .errors import (AccuracyError, DomainError, FinslerError, GeometryError,
                     InvalidInput, InvalidModel, InvalidParameter, StiffnessError)
from .identities import (LevelSetProfile, MonotonicityConstants, PohozaevReport,
                         brezis_merle_radial_check, d0_estimate,
                         mass_lower_bound_check, mu_beta_profile, pohozaev_check)
from .norms import (NormModel, estimate_bounds, eval_gradient, eval_norm,
                    load_norm_config, polar, reverse, verify_norm_properties)
from .operators import (FluxField, RadialProfile, ResidualReport, closed_form_profile,
                        flux, qN_fd, qN_residual, radial_operator_check, radial_shoot)
from .reports import CheckReport
from .solution import (AsymptoticsReport, SolutionParams, asymptotics_check, eval_grad_u,
                       eval_u, gamma0, level_set_radius, mass)
from .wulff import (DomainSpec, Disc, Ellipse, StarDomain, SurfaceQuadrature, WulffAnnulus,
                    WulffBall, isoperimetric_quotient, weighted_perimeter, weighted_volume,
                    wulff_volume)

__version__ = "0.1.0"
