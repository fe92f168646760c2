"""Select the compiled hot loops when available, else the numpy fallback."""

import os

if os.environ.get("EMRESTORE_PURE_PYTHON"):
    from ._pykernels import col2im, correlate_valid, im2col

    BACKEND = "python"
else:
    try:
        from ._ckernels import col2im, correlate_valid, im2col

        BACKEND = "cython"
    except ImportError:
        from ._pykernels import col2im, correlate_valid, im2col

        BACKEND = "python"

__all__ = ["BACKEND", "col2im", "correlate_valid", "im2col"]
