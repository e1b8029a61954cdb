"""Kernel selection.

The compiled extension is used when it was built and imports cleanly;
setting ``BATCHSWAP_PURE_KERNELS=1`` forces the pure-Python kernels.
"""

import os

from . import _kernels_py

if os.environ.get("BATCHSWAP_PURE_KERNELS"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BUY = _kernels_py.BUY
SELL = _kernels_py.SELL
BACKEND = "compiled" if _impl is not _kernels_py else "python"

buy_x = _impl.buy_x
sell_x = _impl.sell_x
run_sequence = _impl.run_sequence
clear_batch = _impl.clear_batch
clear_sequential = _impl.clear_sequential
BUY_X, SELL_X, BUY_Y, SELL_Y = _kernels_py.BUY_X, _kernels_py.SELL_X, _kernels_py.BUY_Y, _kernels_py.SELL_Y
clear_noshort = _impl.clear_noshort
