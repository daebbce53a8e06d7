"""Select the sampler backend at import time.

The compiled ``_chain_kernel`` is preferred; setting the environment variable
``BTVPRIOR_BACKEND=python`` (or a failed import) selects the numpy fallback.
"""

import os

from . import _chain_fallback

try:
    from . import _chain_kernel
except ImportError:  # extension not built
    _chain_kernel = None

_BACKENDS = {"python": _chain_fallback}
if _chain_kernel is not None:
    _BACKENDS["compiled"] = _chain_kernel


def available():
    """Names of the usable backends, preferred first."""
    return [name for name in ("compiled", "python") if name in _BACKENDS]


def get(name=None):
    """Return the backend module called ``name`` (default: the active one)."""
    if name is None:
        return ACTIVE
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available()}") from None


_requested = os.environ.get("BTVPRIOR_BACKEND", "").strip().lower()
ACTIVE = _BACKENDS.get(_requested) or _BACKENDS[available()[0]]
