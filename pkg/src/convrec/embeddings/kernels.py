"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set CONVREC_PURE_PYTHON=1 to force the fallback (used by the benchmark and
by tests that compare the two paths).
"""

from __future__ import annotations

import os

from . import _sgns_py

_FORCE_PY = os.environ.get("CONVREC_PURE_PYTHON", "") == "1"

try:
    if _FORCE_PY:
        raise ImportError
    from . import _sgns as _impl  # type: ignore[attr-defined]

    KERNEL_BACKEND = "compiled"
except ImportError:
    _impl = _sgns_py
    KERNEL_BACKEND = "python"

sgns_epoch = _impl.sgns_epoch


def available_backends() -> dict[str, object]:
    """Both kernel implementations, keyed by name (for benchmarks/tests)."""
    backends: dict[str, object] = {"python": _sgns_py.sgns_epoch}
    try:
        from . import _sgns  # type: ignore[attr-defined]

        backends["compiled"] = _sgns.sgns_epoch
    except ImportError:
        pass
    return backends
