"""Exception hierarchy for dunkl_lab.

Every error carries a short machine-readable ``code`` so that the command
line front end can map failures to exit codes without string matching.
"""


class DunklLabError(Exception):
    code = "error"


class ValidationError(DunklLabError, ValueError):
    """Bad user input (malformed config, out-of-range parameter)."""

    code = "validation"


# root systems
class NotARootSystem(ValidationError):
    code = "not_a_root_system"


class NonInvariantMultiplicity(ValidationError):
    code = "non_invariant_multiplicity"


class MTooSmall(ValidationError):
    code = "m_too_small"


class UnnormalizedRoot(ValidationError):
    code = "unnormalized_root"


class GroupTooLarge(DunklLabError):
    code = "group_too_large"


# calculus / kernels
class NearHyperplane(DunklLabError, ValueError):
    code = "near_hyperplane"


class ZeroRadius(DunklLabError, ValueError):
    code = "zero_radius"


class DimensionTooLarge(DunklLabError):
    code = "dimension_too_large"


class BadRadii(ValidationError):
    code = "bad_radii"


class OriginSingularity(DunklLabError, ValueError):
    code = "origin_singularity"


class OutsideBall(ValidationError):
    code = "outside_ball"


# radial engine
class NonPhysicalSeed(ValidationError):
    code = "non_physical_seed"


class HorizonTooSmall(DunklLabError):
    code = "horizon_too_small"


class UnclassifiableTail(DunklLabError):
    code = "unclassifiable_tail"


class KOHoldsNoBlowup(DunklLabError):
    """Requested a finite blow-up radius for a nonlinearity satisfying Keller-Osserman."""

    code = "ko_holds_no_blowup"


# semilinear solver
class NoConvergence(DunklLabError):
    code = "no_convergence"


# monte carlo
class WallContact(DunklLabError):
    code = "wall_contact"
