"""Batched complex tridiagonal kernels.

Two interchangeable backends solve many tridiagonal systems that share their
off-diagonals and differ only by a scalar shift on the diagonal (one system
per Fourier mode):

* a numba ``@njit`` kernel looping over modes with ``prange``;
* a pure-numpy kernel vectorised across modes, looping over rows.

Set ``CONOSHOCK_DISABLE_JIT=1`` to force the numpy path. The numba path is
also skipped silently when numba cannot be imported. ``CONOSHOCK_THREADS``
caps the numba thread pool.
"""

import os

import numpy as np

_FLAG = os.environ.get("CONOSHOCK_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if JIT_DISABLED:
        raise ImportError
    import numba
    from numba import njit, prange

    # omp first: it is safe for launches from several Python threads (sweeps)
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False


def thread_cap():
    """Worker cap from ``CONOSHOCK_THREADS`` (``None`` when unset)."""
    raw = os.environ.get("CONOSHOCK_THREADS", "").strip()
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError("CONOSHOCK_THREADS must be a positive integer")
    return n


def shifted_tridiag_numpy(sub, diag, sup, shift, rhs):
    """Solve ``(T + shift[k] I) x_k = rhs[k]`` for every mode ``k``.

    ``sub[i]`` couples row ``i`` to ``i-1`` (``sub[0]`` unused), ``sup[i]``
    couples row ``i`` to ``i+1`` (``sup[-1]`` unused). Returns the solutions
    and, per mode, the smallest pivot magnitude seen during elimination.
    """
    m, n = rhs.shape
    cp = np.empty((m, n), dtype=np.complex128)
    dp = np.empty((m, n), dtype=np.complex128)
    piv = diag[0] + shift
    minpiv = np.abs(piv)
    cp[:, 0] = sup[0] / piv
    dp[:, 0] = rhs[:, 0] / piv
    for i in range(1, n):
        piv = diag[i] + shift - sub[i] * cp[:, i - 1]
        np.minimum(minpiv, np.abs(piv), out=minpiv)
        cp[:, i] = sup[i] / piv
        dp[:, i] = (rhs[:, i] - sub[i] * dp[:, i - 1]) / piv
    x = np.empty((m, n), dtype=np.complex128)
    x[:, n - 1] = dp[:, n - 1]
    for i in range(n - 2, -1, -1):
        x[:, i] = dp[:, i] - cp[:, i] * x[:, i + 1]
    return x, minpiv


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _shifted_tridiag_jit(sub, diag, sup, shift, rhs, x, minpiv):
        m, n = rhs.shape
        for k in prange(m):
            cp = np.empty(n, dtype=np.complex128)
            dp = np.empty(n, dtype=np.complex128)
            s = shift[k]
            piv = diag[0] + s
            mp = abs(piv)
            cp[0] = sup[0] / piv
            dp[0] = rhs[k, 0] / piv
            for i in range(1, n):
                piv = diag[i] + s - sub[i] * cp[i - 1]
                a = abs(piv)
                if a < mp:
                    mp = a
                cp[i] = sup[i] / piv
                dp[i] = (rhs[k, i] - sub[i] * dp[i - 1]) / piv
            x[k, n - 1] = dp[n - 1]
            for i in range(n - 2, -1, -1):
                x[k, i] = dp[i] - cp[i] * x[k, i + 1]
            minpiv[k] = mp

    def shifted_tridiag_jit(sub, diag, sup, shift, rhs):
        cap = thread_cap()
        if cap is not None:
            numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))
        m, n = rhs.shape
        x = np.empty((m, n), dtype=np.complex128)
        minpiv = np.empty(m)
        _shifted_tridiag_jit(
            np.ascontiguousarray(sub, dtype=np.complex128),
            np.ascontiguousarray(diag, dtype=np.complex128),
            np.ascontiguousarray(sup, dtype=np.complex128),
            np.ascontiguousarray(shift, dtype=np.complex128),
            np.ascontiguousarray(rhs, dtype=np.complex128),
            x,
            minpiv,
        )
        return x, minpiv

else:  # pragma: no cover
    shifted_tridiag_jit = None


def shifted_tridiag(sub, diag, sup, shift, rhs, backend=None):
    """Dispatch to the selected backend (``"jit"``, ``"numpy"`` or default)."""
    sub = np.asarray(sub, dtype=np.complex128)
    diag = np.asarray(diag, dtype=np.complex128)
    sup = np.asarray(sup, dtype=np.complex128)
    shift = np.atleast_1d(np.asarray(shift, dtype=np.complex128))
    rhs = np.atleast_2d(np.asarray(rhs, dtype=np.complex128))
    if backend is None:
        backend = "jit" if HAVE_NUMBA else "numpy"
    if backend == "jit":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but unavailable")
        return shifted_tridiag_jit(sub, diag, sup, shift, rhs)
    if backend == "numpy":
        return shifted_tridiag_numpy(sub, diag, sup, shift, rhs)
    raise ValueError(f"unknown backend {backend!r}")


def active_backend():
    return "jit" if HAVE_NUMBA else "numpy"
