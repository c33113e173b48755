"""Select the compiled kernels when available, else the numpy fallback.

Set ``DWELLJSR_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

python_kernels = _pykernels
compiled_kernels = None

if os.environ.get("DWELLJSR_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"


def use(name: str) -> None:
    """Switch the active backend (``"compiled"`` or ``"python"``)."""
    global kernels, BACKEND
    if name == "python":
        kernels, BACKEND = python_kernels, "python"
    elif name == "compiled":
        if compiled_kernels is None:
            raise RuntimeError("compiled kernels are not built")
        kernels, BACKEND = compiled_kernels, "compiled"
    else:
        raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["python"] + (["compiled"] if compiled_kernels is not None else [])
