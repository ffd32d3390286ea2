"""Selects the path kernel: the compiled core when importable, else the Python twin.

``DUNKL_LAB_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _core_py

core = _core_py
NAME = "python"

if os.environ.get("DUNKL_LAB_BACKEND", "").lower() != "python":
    try:
        from . import _core as _compiled
    except ImportError:
        pass
    else:
        core = _compiled
        NAME = "compiled"


def get(name: str | None = None):
    """Kernel module by name (``compiled``/``python``); ``None`` gives the default."""
    if name is None:
        return core
    if name == "python":
        return _core_py
    if name == "compiled":
        from . import _core as _compiled

        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def n_threads() -> int:
    env = os.environ.get("DUNKL_LAB_THREADS")
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)
