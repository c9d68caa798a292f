"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``NORDWAVE_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python twins are used. ``BACKEND`` names the
active choice.
"""

import os

from . import _kernels_py

_force_py = os.environ.get("NORDWAVE_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

affine_modes = _impl.affine_modes
dopri_blowup = _impl.dopri_blowup
dopri_blowup_general = _kernels_py.dopri_blowup_general

__all__ = ["BACKEND", "affine_modes", "dopri_blowup", "dopri_blowup_general"]
