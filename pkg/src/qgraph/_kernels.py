"""Secular-matrix assembly and singular-value kernels.

Two interchangeable backends: numba ``@njit`` loops and batched numpy.
The numba path is used when numba imports and ``QGRAPH_DISABLE_JIT`` is
unset (or ``0``); set ``QGRAPH_DISABLE_JIT=1`` to force pure numpy.

A matrix is described by a list of *terms*. Term ``t`` adds
``coef[t] * (ca, cb)`` to columns ``(2e, 2e+1)`` of row ``row[t]``, where
``(ca, cb)`` are the coefficients of ``(a_e, b_e)`` in the value
(``kind 0``) or the outgoing derivative divided by k (``kind 1``) of
``u_e = a_e cos(kx) + b_e sin(kx)`` at the start (``role 0``) or end
(``role 1``) of edge ``e``:

    value, start:  (1, 0)            deriv, start:  (0, 1)
    value, end:    (cos kl, sin kl)  deriv, end:    (sin kl, -cos kl)

Callers pass pre-weighted coefficients; ``normalize`` additionally scales
every row to unit Euclidean norm at each k.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("QGRAPH_DISABLE_JIT", "0").lower() in ("", "0", "false", "no")


def end_coefficients(kl, role, kind):
    """(ca, cb) for one term; works elementwise on arrays."""
    c, s = np.cos(kl), np.sin(kl)
    start = role == 0
    value = kind == 0
    ca = np.where(start, np.where(value, 1.0, 0.0), np.where(value, c, s))
    cb = np.where(start, np.where(value, 0.0, 1.0), np.where(value, s, -c))
    return ca, cb


# -- numpy backend ----------------------------------------------------------------


def assemble_numpy(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    kl = np.outer(ks, lengths[edges])
    ca, cb = end_coefficients(kl, roles[None, :], kinds[None, :])
    out = np.zeros((ks.size, n, n), dtype=np.result_type(coefs.dtype, float))
    np.add.at(out, (slice(None), rows, 2 * edges), coefs * ca)
    np.add.at(out, (slice(None), rows, 2 * edges + 1), coefs * cb)
    if normalize:
        nrm = np.linalg.norm(out, axis=2, keepdims=True)
        out /= np.where(nrm > 0, nrm, 1.0)
    return out


def sigma_min_grid_numpy(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
    out = np.empty(len(ks))
    # chunking bounds the memory of the batched (nk, n, n) stack
    chunk = max(1, 2_000_000 // max(n * n, 1))
    for i in range(0, len(ks), chunk):
        m = assemble_numpy(ks[i:i + chunk], lengths, rows, edges, roles, kinds, coefs, n, normalize)
        out[i:i + chunk] = np.linalg.svd(m, compute_uv=False)[:, -1]
    return out


def singular_values_numpy(k, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
    m = assemble_numpy([k], lengths, rows, edges, roles, kinds, coefs, n, normalize)[0]
    return np.linalg.svd(m, compute_uv=False)


# -- numba backend ----------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _assemble_nb(k, lengths, rows, edges, roles, kinds, coefs, out, normalize):
        out[:, :] = 0.0
        for t in range(rows.shape[0]):
            e = edges[t]
            if roles[t] == 0:
                if kinds[t] == 0:
                    ca, cb = 1.0, 0.0
                else:
                    ca, cb = 0.0, 1.0
            else:
                c = np.cos(k * lengths[e])
                s = np.sin(k * lengths[e])
                if kinds[t] == 0:
                    ca, cb = c, s
                else:
                    ca, cb = s, -c
            out[rows[t], 2 * e] += coefs[t] * ca
            out[rows[t], 2 * e + 1] += coefs[t] * cb
        if normalize:
            n = out.shape[0]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += abs(out[i, j]) ** 2
                if acc > 0.0:
                    nrm = np.sqrt(acc)
                    for j in range(n):
                        out[i, j] /= nrm

    # Singular values only (LAPACK gesdd with jobz='N'). np.linalg.svd under
    # numba always forms U and V, which doubles the cost of the hot loop; the
    # LAPACK bridge it uses internally is reused here with jobz='N'. It is a
    # link-time symbol, so unlike a ctypes pointer it keeps functions cacheable.
    try:
        from numba import types
        from numba.np.linalg import _LAPACK, ensure_lapack

        ensure_lapack()
        _gesdd_d = _LAPACK().numba_ez_gesdd(types.float64)
        _gesdd_z = _LAPACK().numba_ez_gesdd(types.complex128)
        HAS_GESDD = True
    except Exception:  # pragma: no cover - depends on numba internals
        HAS_GESDD = False

    if HAS_GESDD:
        from numba.extending import overload

        def _gesdd_values(a, s):  # pragma: no cover - replaced by the overload under njit
            raise NotImplementedError

        @overload(_gesdd_values)
        def _gesdd_values_impl(a, s):
            # pick the LAPACK routine at compile time; both branches of a runtime
            # test would be typed against the same array dtype
            if isinstance(a.dtype, types.Complex):
                fn, kind = _gesdd_z, np.int8(ord("z"))
            else:
                fn, kind = _gesdd_d, np.int8(ord("d"))
            jobz = np.int8(ord("N"))

            def impl(a, s):
                n = a.shape[0]
                # U and V^T are not referenced for jobz='N' but must be valid pointers
                return fn(kind, jobz, n, n, a.ctypes, n, s.ctypes, a.ctypes, n, a.ctypes, 1)
            return impl

        @njit(cache=True, nogil=True)
        def _svals_nb(m, a, s, cplx):
            """Singular values of square ``m`` into ``s`` (descending); ``a`` is scratch of m's shape."""
            a[:, :] = m  # gesdd overwrites its input; C order is the transpose, same singular values
            if _gesdd_values(a, s) != 0:
                s[:] = np.linalg.svd(m, False)[1]

    else:  # pragma: no cover

        @njit(cache=True, nogil=True)
        def _svals_nb(m, a, s, cplx):
            s[:] = np.linalg.svd(m, False)[1]

    @njit(cache=True, nogil=True)
    def _sigma_min_grid_nb(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize, cplx):
        res = np.empty(ks.shape[0])
        m = np.zeros((n, n), dtype=coefs.dtype)
        a = np.empty_like(m)
        s = np.empty(n)
        for i in range(ks.shape[0]):
            _assemble_nb(ks[i], lengths, rows, edges, roles, kinds, coefs, m, normalize)
            _svals_nb(m, a, s, cplx)
            res[i] = s[n - 1]
        return res

    @njit(cache=True, nogil=True)
    def _singular_values_nb(k, lengths, rows, edges, roles, kinds, coefs, n, normalize, cplx):
        m = np.zeros((n, n), dtype=coefs.dtype)
        _assemble_nb(k, lengths, rows, edges, roles, kinds, coefs, m, normalize)
        s = np.empty(n)
        _svals_nb(m, np.empty_like(m), s, cplx)
        return s

    def assemble_numba(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
        ks = np.atleast_1d(np.asarray(ks, dtype=float))
        out = np.zeros((ks.size, n, n), dtype=np.result_type(coefs.dtype, float))
        for i, k in enumerate(ks):
            _assemble_nb(k, lengths, rows, edges, roles, kinds, coefs.astype(out.dtype), out[i], normalize)
        return out

    def sigma_min_grid_numba(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
        ks = np.ascontiguousarray(ks, dtype=float)
        return _sigma_min_grid_nb(ks, lengths, rows, edges, roles, kinds, coefs, n, normalize,
                                  np.iscomplexobj(coefs))

    def singular_values_numba(k, lengths, rows, edges, roles, kinds, coefs, n, normalize=False):
        return _singular_values_nb(float(k), lengths, rows, edges, roles, kinds, coefs, n, normalize,
                                   np.iscomplexobj(coefs))


if USE_NUMBA:
    assemble = assemble_numba
    sigma_min_grid = sigma_min_grid_numba
    singular_values = singular_values_numba
else:
    assemble = assemble_numpy
    sigma_min_grid = sigma_min_grid_numpy
    singular_values = singular_values_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
