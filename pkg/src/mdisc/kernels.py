"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``MDISC_PURE_PYTHON=1``
forces the numpy fallback. ``BACKEND`` names the active implementation.
"""

import os

from . import _kernels_py

if os.environ.get("MDISC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

qubit_tensor_power = _impl.qubit_tensor_power
scan_principal_submatrices = _impl.scan_principal_submatrices


def available_backends() -> dict:
    out = {"python": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
