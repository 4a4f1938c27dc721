"""Backend dispatch for the LSTM sequence kernels.

The kernels in ``_impl`` are plain numpy; by default they are wrapped
with numba @njit (nopython, nogil, on-disk cache). Set
``GALSTM_DISABLE_NUMBA=1`` before import to run the pure-numpy path
instead (also chosen automatically when numba is missing). Both paths
execute the same source, so results agree to the last bit or one ulp.

``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

import os

from . import _impl

ENV_FLAG = "GALSTM_DISABLE_NUMBA"


def _numba_enabled() -> bool:
    if os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _numba_enabled():
    from numba import njit

    _jit = njit(cache=True, nogil=True)
    lstm_layer_forward = _jit(_impl.lstm_layer_forward)
    lstm_layer_backward = _jit(_impl.lstm_layer_backward)
    BACKEND = "numba"
else:
    lstm_layer_forward = _impl.lstm_layer_forward
    lstm_layer_backward = _impl.lstm_layer_backward
    BACKEND = "numpy"
