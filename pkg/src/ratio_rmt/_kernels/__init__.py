"""Kernel backend selection.

The native (Cython) backend is used when its extension module imports
cleanly; otherwise the pure-numpy backend takes over.  Selection can be
forced with RATIO_RMT_BACKEND=native|pure (any other value raises).
"""

import os

from . import pure

_forced = os.environ.get("RATIO_RMT_BACKEND", "").strip().lower()
_native_error = None

if _forced == "pure":
    backend = pure
else:
    try:
        from . import _native as backend  # type: ignore[no-redef]
    except ImportError as exc:
        _native_error = exc
        if _forced == "native":
            raise ImportError(
                "RATIO_RMT_BACKEND=native but the native kernel is not built"
            ) from exc
        backend = pure
    else:
        if _forced not in ("", "native"):
            raise ValueError(f"unknown RATIO_RMT_BACKEND={_forced!r}")

if _forced not in ("", "native", "pure"):
    raise ValueError(f"unknown RATIO_RMT_BACKEND={_forced!r}")

BACKEND = backend.BACKEND

eval_beta1_panels = backend.eval_beta1_panels
ratios_real = backend.ratios_real
ratios_herm = backend.ratios_herm
