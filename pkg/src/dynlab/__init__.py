"""dynlab: a numerical laboratory for one-dimensional dynamics.

Component-tracked pullbacks, nice sets, return maps, Green functions,
external rays, puzzle pieces, and finite-budget audits of the
backward-contraction and large-derivative conditions, for complex
polynomials and real interval maps.
"""

__version__ = "0.1.0"

from .polynomials import Polynomial, orbit                     # noqa: F401
from .geometry import JordanDisk                               # noqa: F401
from .intervals import IntervalMap                             # noqa: F401
