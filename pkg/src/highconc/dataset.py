import numpy as np

from . import _config


class Dataset:
    """``n`` observations on ``S^{p-1}`` stored as a read-only ``(n, p)`` array.

    Rows must already be unit vectors (within ``1e-10``); use
    :func:`highconc.io.ingest` to normalize raw input.
    """

    def __init__(self, rows, tol=_config.DATASET_UNIT_TOL):
        x = np.array(rows, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("dataset needs a 2-D array with at least one row")
        if x.shape[1] < 2:
            raise ValueError("dimension p must be >= 2")
        if not np.all(np.isfinite(x)):
            raise ValueError("dataset contains non-finite values")
        dev = np.abs(np.linalg.norm(x, axis=1) - 1.0)
        if np.any(dev > tol):
            bad = int(np.argmax(dev))
            raise ValueError("row %d is not unit-norm (|norm - 1| = %.3g)" % (bad, dev[bad]))
        x.flags.writeable = False
        self._rows = x

    @property
    def rows(self):
        return self._rows

    @property
    def n(self):
        return self._rows.shape[0]

    @property
    def p(self):
        return self._rows.shape[1]

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self._rows if dtype is None else self._rows.astype(dtype)

    def __repr__(self):
        return "Dataset(n=%d, p=%d)" % (self.n, self.p)

    def mean(self):
        return self._rows.mean(axis=0)

    def drop(self, index):
        return Dataset(np.delete(self._rows, index, axis=0))

    def rotate(self, o):
        """Rows mapped by the orthogonal matrix ``o``."""
        return Dataset(self._rows @ np.asarray(o, dtype=float).T)
