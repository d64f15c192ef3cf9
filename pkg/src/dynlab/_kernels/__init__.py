"""Kernel backend selection.

The compiled Cython core is preferred; the pure-Python fallback is used when
the extension is missing or DYNLAB_PURE_PYTHON is set.  Both expose the same
functions with identical semantics.
"""

import os

if os.environ.get("DYNLAB_PURE_PYTHON"):
    from . import pyfallback as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pyfallback as impl

BACKEND = impl.BACKEND
LIFT_OK = impl.LIFT_OK
LIFT_BISECT_EXHAUSTED = impl.LIFT_BISECT_EXHAUSTED
LIFT_DERIV_VANISHED = impl.LIFT_DERIV_VANISHED

horner2 = impl.horner2
horner2_many = impl.horner2_many
orbit_cocycle = impl.orbit_cocycle
lift_path = impl.lift_path
iterate_eval = impl.iterate_eval
newton_iterate_solve = impl.newton_iterate_solve
green_many = impl.green_many
