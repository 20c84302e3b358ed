"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-numpy kernels are used. `SENTASR_BACKEND=python|cython` forces the
choice (forcing cython raises if the extension is missing).
"""

import os

_forced = os.environ.get("SENTASR_BACKEND", "").strip().lower()

if _forced not in ("", "cython", "python"):
    raise ValueError(f"SENTASR_BACKEND must be 'python' or 'cython', got {_forced!r}")

if _forced == "python":
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        from . import _kernels_py as _impl
        BACKEND = "python"

lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward
