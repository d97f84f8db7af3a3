"""Exact second-order deformation calculus on finite group models.

Layers: exact F_p / truncated-polynomial arithmetic (ring), one-step
reducible generalized matrix algebras (gma), twisted group cohomology with
deterministic solvers (model, cohomology), the deformation pipeline and
its invariants (deform, pinning), elementary level criteria (arith), and
a CLI (cli).
"""

from .ring import BACKEND, FpMatrix, TruncatedPoly, WeightedScalar, solve_linear

__all__ = [
    "BACKEND",
    "FpMatrix",
    "TruncatedPoly",
    "WeightedScalar",
    "solve_linear",
]

__version__ = "0.1.0"
