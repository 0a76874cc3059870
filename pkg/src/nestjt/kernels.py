"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Set ``NESTJT_KERNELS=python`` to force the fallback.
"""
import importlib
import os

BACKENDS = ("cython", "python")


def load(name):
    """Return the kernel module for backend `name`."""
    if name == "cython":
        return importlib.import_module("nestjt._ckernels")
    if name == "python":
        return importlib.import_module("nestjt._pykernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def available():
    out = ["python"]
    try:
        load("cython")
    except ImportError:
        return out
    return ["cython"] + out


def _select():
    forced = os.environ.get("NESTJT_KERNELS", "").strip().lower()
    if forced:
        return forced, load(forced)
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


BACKEND, impl = _select()


def use(name):
    """Switch the active backend at runtime (used by tests and benchmarks)."""
    global BACKEND, impl
    impl = load(name)
    BACKEND = name
