"""Lattice and central-charge computations for stability conditions on K3 surfaces of Picard rank one."""

from .errors import K3StabError
from .mukai_lattice import LatticeContext, MukaiVector, Tolerances, enumerate_roots, pair, reflect
from .period_domain import OmegaVector, TubePoint, exp_class, holes, in_geometric_chamber
from .monodromy import GroupElement, Polyline, lift_loop

__all__ = [
    "K3StabError",
    "LatticeContext",
    "MukaiVector",
    "Tolerances",
    "enumerate_roots",
    "pair",
    "reflect",
    "OmegaVector",
    "TubePoint",
    "exp_class",
    "holes",
    "in_geometric_chamber",
    "GroupElement",
    "Polyline",
    "lift_loop",
]
