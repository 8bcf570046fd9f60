"""Executor selection: compiled Cython kernel when importable, else numpy.

SPHEREOT_BACKEND=python|compiled forces a choice ("compiled" raises if
the extension is missing); the default "auto" prefers the extension.
"""

import os

from . import _tape_py

_FORCED = None


def _load_compiled():
    try:
        from . import _tape_cy
        return _tape_cy
    except ImportError:
        return None


def get_executor():
    if _FORCED is not None:
        return _FORCED
    choice = os.environ.get("SPHEREOT_BACKEND", "auto")
    if choice == "python":
        return _tape_py
    compiled = _load_compiled()
    if choice == "compiled":
        if compiled is None:
            raise ImportError("compiled backend requested but sphereot.autodiff._tape_cy "
                              "is not built; reinstall with a C compiler available")
        return compiled
    return compiled if compiled is not None else _tape_py


def force_backend(name):
    """Override selection for the current process (tests, benchmarks)."""
    global _FORCED
    if name is None:
        _FORCED = None
        return
    if name == "python":
        _FORCED = _tape_py
    elif name == "compiled":
        compiled = _load_compiled()
        if compiled is None:
            raise ImportError("compiled backend not built")
        _FORCED = compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def active_backend_name():
    return get_executor().name


def compiled_available():
    return _load_compiled() is not None
