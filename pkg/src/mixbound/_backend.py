"""Selects the compiled simulation kernel, falling back to numpy.

Set ``MIXBOUND_PURE_PYTHON=1`` to force the fallback.
"""

import os
from types import ModuleType

from . import _simpy

try:
    from . import _simkernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _simpy}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("MIXBOUND_PURE_PYTHON", "") in ("", "0"):
    DEFAULT = "compiled"
else:
    DEFAULT = "python"


def get_backend(name: str = None) -> ModuleType:
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
