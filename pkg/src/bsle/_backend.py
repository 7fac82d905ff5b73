"""Kernel backend selection: compiled core when available, pure Python otherwise.

Set ``BSLE_BACKEND=python`` to force the fallback (useful for equivalence tests).
"""

import os

if os.environ.get("BSLE_BACKEND", "").lower() == "python":
    from . import _pycore as core
else:
    try:
        from . import _core as core
    except ImportError:  # extension not built
        from . import _pycore as core

NAME = core.NAME

__all__ = ["core", "NAME"]
