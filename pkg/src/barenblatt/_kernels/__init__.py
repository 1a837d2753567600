"""Hot-loop kernels with two interchangeable backends.

``python``  — numpy-vectorized reference implementation (always available)
``cython``  — compiled extension, same arithmetic path per element

Selection: per-call ``backend=`` argument wins, then the BARENBLATT_KERNELS
environment variable, then cython-if-built.  Both backends consume the same
counter-based noise (SplitMix64 hashing + ndtri), so ensembles agree across
backends up to last-ulp libm differences in pow/sqrt.
"""
from __future__ import annotations

import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}

try:  # compiled accelerator is optional
    from . import _cykernels  # type: ignore[attr-defined]

    _BACKENDS["cython"] = _cykernels
except ImportError:  # pragma: no cover - depends on build environment
    _cykernels = None


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def default_backend() -> str:
    env = os.environ.get("BARENBLATT_KERNELS", "").strip().lower()
    if env:
        if env not in _BACKENDS:
            raise ValueError(
                f"BARENBLATT_KERNELS={env!r} but available backends are "
                f"{available_backends()}"
            )
        return env
    return "cython" if "cython" in _BACKENDS else "python"


def get_backend(name: str | None = None):
    """Kernel namespace for ``name`` (None resolves the default)."""
    if name is None:
        name = default_backend()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None
