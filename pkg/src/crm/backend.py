"""Backend selection for the weight-computation inner loops.

The compiled Cython extension is preferred when it imported successfully;
setting ``CRM_BACKEND=python`` in the environment forces the NumPy fallback.
Both expose the same three functions with identical semantics.
"""

import os

from . import _fallback

try:
    from . import _speedups
except ImportError:  # pragma: no cover - depends on build environment
    _speedups = None

if _speedups is not None and os.environ.get("CRM_BACKEND", "").lower() != "python":
    _impl = _speedups
    HAVE_COMPILED = True
else:
    _impl = _fallback
    HAVE_COMPILED = False

BACKEND_NAME = "compiled" if _impl is not _fallback else "python"

sqexp_weights = _impl.sqexp_weights
epanechnikov_weights = _impl.epanechnikov_weights
stratified_weights = _impl.stratified_weights
