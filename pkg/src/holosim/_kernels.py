"""Hot numerical kernels with interchangeable numba and numpy backends.

Both backends consume the same generator-stack representation
``H(s) = sum_k coeffs[s, k] * g[k]`` and produce identical results to
rounding.  Selection order: an explicit `use_backend` call, then the
HOLOSIM_BACKEND environment variable ("numba" or "numpy"), then numba if it
imports, numpy otherwise.
"""

from __future__ import annotations

import os

import numpy as np

_FORCED: str | None = None
_NUMBA_CACHE: dict[str, object] = {}


def use_backend(name: str | None) -> None:
    """Force a backend for this process ("numba", "numpy", or None for auto)."""
    global _FORCED
    if name is not None and name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    _FORCED = name


def _numba_kernels():
    if "kernels" in _NUMBA_CACHE:
        return _NUMBA_CACHE["kernels"]
    import numba

    @numba.njit(cache=True)
    def wilson(g, coeffs, energy, tol, psi0):
        n, k = coeffs.shape
        d = g.shape[1]
        m = psi0.shape[1]
        psi = psi0.copy()
        counts = np.empty(n, np.int64)
        min_gap = 1e300
        h = np.empty((d, d), np.complex128)
        for t in range(n):
            for i in range(d):
                for j in range(d):
                    acc = 0.0 + 0.0j
                    for q in range(k):
                        acc += coeffs[t, q] * g[q, i, j]
                    h[i, j] = acc
            w, v = np.linalg.eigh(h)
            cnt = 0
            for i in range(d):
                dist = abs(w[i] - energy)
                if dist <= tol:
                    cnt += 1
                elif dist < min_gap:
                    min_gap = dist
            counts[t] = cnt
            tmp = np.zeros((cnt, m), np.complex128)
            ci = 0
            for i in range(d):
                if abs(w[i] - energy) <= tol:
                    for mm in range(m):
                        acc = 0.0 + 0.0j
                        for dd in range(d):
                            acc += np.conj(v[dd, i]) * psi[dd, mm]
                        tmp[ci, mm] = acc
                    ci += 1
            out = np.zeros((d, m), np.complex128)
            ci = 0
            for i in range(d):
                if abs(w[i] - energy) <= tol:
                    for dd in range(d):
                        for mm in range(m):
                            out[dd, mm] += v[dd, i] * tmp[ci, mm]
                    ci += 1
            psi = out
        return psi, counts, min_gap

    @numba.njit(cache=True)
    def propagate(g, coeffs, dt, psi0):
        n, k = coeffs.shape
        d = g.shape[1]
        m = psi0.shape[1]
        psi = psi0.copy()
        h = np.empty((d, d), np.complex128)
        tmp = np.empty((d, m), np.complex128)
        for t in range(n):
            for i in range(d):
                for j in range(d):
                    acc = 0.0 + 0.0j
                    for q in range(k):
                        acc += coeffs[t, q] * g[q, i, j]
                    h[i, j] = acc
            w, v = np.linalg.eigh(h)
            for i in range(d):
                for mm in range(m):
                    acc = 0.0 + 0.0j
                    for dd in range(d):
                        acc += np.conj(v[dd, i]) * psi[dd, mm]
                    tmp[i, mm] = acc
            for i in range(d):
                ph = np.exp(-1j * w[i] * dt)
                for mm in range(m):
                    tmp[i, mm] *= ph
            for dd in range(d):
                for mm in range(m):
                    acc = 0.0 + 0.0j
                    for i in range(d):
                        acc += v[dd, i] * tmp[i, mm]
                    psi[dd, mm] = acc
        return psi

    _NUMBA_CACHE["kernels"] = (wilson, propagate)
    return _NUMBA_CACHE["kernels"]


def backend_name() -> str:
    choice = _FORCED or os.environ.get("HOLOSIM_BACKEND", "auto").lower()
    if choice in ("", "auto"):
        try:
            _numba_kernels()
            return "numba"
        except ImportError:
            return "numpy"
    if choice == "numba":
        _numba_kernels()
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"HOLOSIM_BACKEND must be 'numba' or 'numpy', got {choice!r}")


def _prepare(g, coeffs, psi0):
    g = np.ascontiguousarray(g, dtype=np.complex128)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    psi0 = np.ascontiguousarray(psi0, dtype=np.complex128)
    if coeffs.shape[1] != g.shape[0]:
        raise ValueError("coefficient columns must match generator count")
    if psi0.shape[0] != g.shape[1]:
        raise ValueError("state dimension must match generators")
    return g, coeffs, psi0


def _wilson_numpy(g, coeffs, energy, tol, psi0, chunk=256):
    psi = psi0.copy()
    n = coeffs.shape[0]
    counts = np.empty(n, dtype=np.int64)
    min_gap = np.inf
    for start in range(0, n, chunk):
        block = coeffs[start:start + chunk]
        hs = np.einsum("nk,kij->nij", block, g)
        ws, vs = np.linalg.eigh(hs)
        for i in range(block.shape[0]):
            sel = np.abs(ws[i] - energy) <= tol
            cnt = int(np.count_nonzero(sel))
            counts[start + i] = cnt
            if cnt < ws.shape[1]:
                gap = float(np.min(np.abs(ws[i][~sel] - energy)))
                if gap < min_gap:
                    min_gap = gap
            v = vs[i][:, sel]
            psi = v @ (v.conj().T @ psi)
    return psi, counts, min_gap


def _propagate_numpy(g, coeffs, dt, psi0, chunk=512):
    psi = psi0.copy()
    n = coeffs.shape[0]
    for start in range(0, n, chunk):
        block = coeffs[start:start + chunk]
        hs = np.einsum("nk,kij->nij", block, g)
        ws, vs = np.linalg.eigh(hs)
        phases = np.exp(-1j * ws * dt)
        for i in range(block.shape[0]):
            v = vs[i]
            psi = v @ (phases[i][:, None] * (v.conj().T @ psi))
    return psi


def wilson_transport(g, coeffs, energy, tol, psi0):
    """Sequentially project ``psi0`` onto the energy window at every sample.

    Returns (transported columns, per-sample window count, smallest distance
    from the window edge to an excluded eigenvalue).
    """
    g, coeffs, psi0 = _prepare(g, coeffs, psi0)
    if backend_name() == "numba":
        wilson, _ = _numba_kernels()
        psi, counts, min_gap = wilson(g, coeffs, float(energy), float(tol), psi0)
        return psi, counts, float(min_gap) if min_gap < 1e299 else np.inf
    return _wilson_numpy(g, coeffs, float(energy), float(tol), psi0)


def propagate_steps(g, coeffs, dt, psi0):
    """Apply exp(-i H(s) dt) for every coefficient row, in order."""
    g, coeffs, psi0 = _prepare(g, coeffs, psi0)
    if backend_name() == "numba":
        _, propagate = _numba_kernels()
        return propagate(g, coeffs, float(dt), psi0)
    return _propagate_numpy(g, coeffs, float(dt), psi0)
