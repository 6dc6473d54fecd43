"""Backend selection for the banded NNLS kernels.

The compiled extension is used when it imports; setting the environment
variable ``EDADECOMP_PURE_PYTHON=1`` forces the numpy/scipy fallback.
"""
import os

from . import _fallback

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _fallback}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Kernel module by name; ``None`` picks the default for this process."""
    if name is None:
        if os.environ.get("EDADECOMP_PURE_PYTHON", "") not in ("", "0") or _core is None:
            return _fallback
        return _core
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}") from None


BACKEND = get_backend().NAME
