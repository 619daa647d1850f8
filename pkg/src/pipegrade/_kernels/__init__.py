"""Neighbor-scan kernel selection.

The compiled extension is preferred when it imported cleanly; otherwise
the pure Python fallback serves the same interface. PIPEGRADE_KERNEL
(``native`` or ``python``) pins the choice at import time, and
set_active() switches it programmatically (used by the benchmark and the
backend-parity tests).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pyfallback

_backends: dict[str, ModuleType] = {"python": _pyfallback}
try:
    from . import _native  # type: ignore[attr-defined]

    _backends["native"] = _native
except ImportError:
    pass


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_backends))


def _initial() -> ModuleType:
    forced = os.environ.get("PIPEGRADE_KERNEL")
    if forced:
        if forced not in _backends:
            raise ImportError(
                f"PIPEGRADE_KERNEL={forced!r} but that backend is unavailable; "
                f"have {available_backends()}"
            )
        return _backends[forced]
    return _backends.get("native", _pyfallback)


_active = _initial()


def get_active() -> ModuleType:
    return _active


def active_name() -> str:
    return _active.NAME


def set_active(name: str) -> None:
    global _active
    if name not in _backends:
        raise ValueError(f"unknown kernel backend {name!r}; have {available_backends()}")
    _active = _backends[name]
