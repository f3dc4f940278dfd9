"""Inner-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when available; set ``UAVSTREAM_PURE_PY=1``
to force the numpy implementation. Both backends are output-identical, so
the selection never changes results, only speed.
"""

import os

from . import _pykernels

if os.environ.get("UAVSTREAM_PURE_PY"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
assign_nearest = _impl.assign_nearest
temporal_hold = _impl.temporal_hold

__all__ = ["BACKEND", "assign_nearest", "temporal_hold"]
