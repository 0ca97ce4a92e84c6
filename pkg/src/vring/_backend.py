"""Import-time choice between the compiled core and the numpy fallback.

Set ``VRING_BACKEND=python`` to force the fallback (used by the benchmark
and by the cross-backend tests).
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("VRING_BACKEND", "").lower() != "python":
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback

ellipke_m1 = _impl.ellipke_m1
gstar_pairs = _impl.gstar_pairs
offcontour_fields = _impl.offcontour_fields
oncontour_fields = _impl.oncontour_fields


def implementations():
    """Both implementations keyed by name; ``compiled`` only if it imported."""
    out = {"python": _fallback}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
