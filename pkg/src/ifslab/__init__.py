"""Laboratory for transitivity of iterated function systems of area-preserving
surface maps: grid topology of annular continua, bump-flow separators, box
dimension of chain sets and coverage testing."""
from .errors import *  # noqa: F401,F403
from .geometry import ANNULUS, SQUARE, TORUS, Chart, ChartPoint, CellIndex  # noqa: F401
from .maps import (AreaMap, Composite, Conjugate, Identity, IntegrableTwist,  # noqa: F401
                   KickedTwist, apply, apply_inverse, compose, jacobian_det, map_from_config)

__version__ = "0.1.0"
