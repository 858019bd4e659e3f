"""Backend selection for the product-integration kernels.

The compiled extension is used when it imports; setting the environment
variable ``FRACVOLTERRA_PURE=1`` forces the numpy fallback.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available_backends():
    return tuple(_BACKENDS)


def get_backend(name=None):
    """Kernel module by name; ``None`` picks the default."""
    if name is None:
        if os.environ.get("FRACVOLTERRA_PURE", "") not in ("", "0"):
            name = "python"
        else:
            name = "cython" if "cython" in _BACKENDS else "python"
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}") from None


def default_backend_name():
    return get_backend().BACKEND
