"""Computable analysis on an exact dyadic core.

Modules:

* ``exact`` -- dyadics, intervals, computable reals as rapid Cauchy names
* ``machines`` -- counter machines and stage-enumerated c.e. sets
* ``functions`` -- functions on [0, 1] with enclosures; l2 vectors and functionals
* ``constructions`` -- Specker sequences, trisection, maxima, Kleene trees, ...
* ``weihrauch`` -- problems, oracles, verifiers and the reduction harness
* ``reductions`` -- executable reduction witnesses
* ``cli`` -- batch command line
"""

from .exact import CReal, Dyadic, Interval, MonotoneSeq
from .functions import CFunc, EllTwoVec, Functional, PLFunc
from .machines import MachineProgram, StagePair, StageSet

__version__ = "0.1.0"

__all__ = [
    "CReal",
    "Dyadic",
    "Interval",
    "MonotoneSeq",
    "CFunc",
    "EllTwoVec",
    "Functional",
    "PLFunc",
    "MachineProgram",
    "StagePair",
    "StageSet",
]
