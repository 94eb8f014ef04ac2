"""Symplectic lattice statistics.

Exact linear algebra for Sp(2n), classification of diagonal Sp(2n,Z)-orbits
on primitive integer vector pairs, the arithmetic coefficient machinery that
weights them, numerical hypersurface integrals, and Monte Carlo experiments
on random symplectic lattices (means, second moments, discrepancy decay).
"""

from symplat.symplectic import (
    SymplecticMatrix,
    Vector2n,
    symplectic_form,
    tau,
    is_symplectic,
    make_generator,
    standard_J,
    complete_symplectic_basis,
)
from symplat.orbits import (
    PrimitivePair,
    OrbitClass,
    ReductionWitness,
    minors_gcd,
    orbit_invariants,
    move_to_e1,
    reduce_pair,
    same_orbit,
    transporter_T,
)
from symplat.geometry import RegionSpec, FrameAtX, frame_at, G_integral, G_tilde

__version__ = "0.1.0"

__all__ = [
    "SymplecticMatrix",
    "Vector2n",
    "symplectic_form",
    "tau",
    "is_symplectic",
    "make_generator",
    "standard_J",
    "complete_symplectic_basis",
    "PrimitivePair",
    "OrbitClass",
    "ReductionWitness",
    "minors_gcd",
    "orbit_invariants",
    "move_to_e1",
    "reduce_pair",
    "same_orbit",
    "transporter_T",
    "RegionSpec",
    "FrameAtX",
    "frame_at",
    "G_integral",
    "G_tilde",
    "__version__",
]
