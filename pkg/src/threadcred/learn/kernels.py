"""Select the forest kernel backend at import.

The compiled extension is used when it was built; set ``THREADCRED_PURE=1``
to force the pure-Python fallback.
"""

import os

from threadcred.learn import _pykernels

if os.environ.get("THREADCRED_PURE"):
    _impl = _pykernels
else:
    try:
        from threadcred.learn import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = _impl.BACKEND
fit_forest = _impl.fit_forest
predict_forest = _impl.predict_forest

# both backends, for benchmarking and cross-checks
python_backend = _pykernels
try:
    from threadcred.learn import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None
