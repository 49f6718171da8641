"""Backend selection for the quadrature kernels.

The compiled extension is used when it was built; otherwise the NumPy
implementation is used. Set ``SEALSIM_KERNELS=python`` to force the fallback.
"""

import os

from . import _kernels_py

_choice = os.environ.get("SEALSIM_KERNELS", "auto").lower()

_impl = _kernels_py
if _choice != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "cython":
            raise
    else:
        _impl = _compiled

BACKEND = _impl.BACKEND
element_system = _impl.element_system
cell_integrals = _impl.cell_integrals
gradients_at = _impl.gradients_at
quad_points = _kernels_py.quad_points

QUAD_REF = _kernels_py.QUAD_REF
QUAD_W = _kernels_py.QUAD_W
GAUSS_X = _kernels_py.GAUSS_X
GAUSS_W = _kernels_py.GAUSS_W
shape_values = _kernels_py.shape_values


def available_backends() -> dict:
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        out["cython"] = _compiled
    except ImportError:
        pass
    return out
