"""Inner loops of the stochastic simulators.

Each kernel exists as a numba ``@njit`` function and as a pure numpy/Python
fallback. Set ``LASERSTATS_NO_NUMBA=1`` (or run without numba installed) to
use the fallback; :func:`resolve_backend` reads the flag on every call so it
can be flipped at runtime.

Random variates are drawn outside the kernels and passed in as arrays, so
both backends consume identical streams. The Gillespie kernel is the same
source in both backends and produces bit-identical output; the Langevin
fallback uses a vectorized modal scan and agrees to rounding.
"""
from __future__ import annotations

import math
import os

import numpy as np

ENV_FLAG = "LASERSTATS_NO_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def resolve_backend(backend: str | None = None) -> str:
    if backend is None:
        flag = os.environ.get(ENV_FLAG, "").strip().lower()
        disabled = flag not in ("", "0", "false", "no")
        backend = "numpy" if disabled or not HAVE_NUMBA else "numba"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def _jit(func):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func


# --------------------------------------------------------------------------
# Euler-Maruyama for d(dN, dn) = -A (dN, dn) dt + (0, amp) dW
# --------------------------------------------------------------------------

def _langevin_python(state, A, dt, amp, xi, bin_len, out):
    """Advance ``len(xi)`` steps; if ``bin_len > 0`` write per-bin sums.

    ``out[b]`` receives ``(sum dN, sum dN^2, sum dn, sum dn^2, dN_end, dn_end)``.
    """
    a00 = A[0, 0]
    a01 = A[0, 1]
    a10 = A[1, 0]
    a11 = A[1, 1]
    x0 = state[0]
    x1 = state[1]
    s = amp * math.sqrt(dt)
    b = 0
    k = 0
    for i in range(xi.shape[0]):
        y0 = x0 - dt * (a00 * x0 + a01 * x1)
        y1 = x1 - dt * (a10 * x0 + a11 * x1) + s * xi[i]
        x0 = y0
        x1 = y1
        if bin_len > 0:
            out[b, 0] += x0
            out[b, 1] += x0 * x0
            out[b, 2] += x1
            out[b, 3] += x1 * x1
            k += 1
            if k == bin_len:
                out[b, 4] = x0
                out[b, 5] = x1
                k = 0
                b += 1
    state[0] = x0
    state[1] = x1


_langevin_numba = _jit(_langevin_python)

_SCAN_BLOCK = 128


def _modal_scan(lam, y0, w):
    """Solve ``y[k] = lam * y[k-1] + w[k]`` (``y[-1] = y0``) for complex ``lam``.

    Blocks of ``_SCAN_BLOCK`` steps are solved in parallel through a scaled
    cumulative sum; only the block starts are chained sequentially.
    """
    m = w.size
    L = _SCAN_BLOCK
    nblk = -(-m // L)
    padded = np.zeros(nblk * L, dtype=complex)
    padded[:m] = w
    blocks = padded.reshape(nblk, L)
    powers = lam ** np.arange(1, L + 1)  # lam^(i+1)
    inv = lam ** -np.arange(L)  # lam^-i
    z = np.cumsum(blocks * inv, axis=1) * powers / lam  # zero-start solution
    carry = np.empty(nblk, dtype=complex)
    lam_L = powers[-1]
    start = complex(y0)
    ends = z[:, -1]
    for b in range(nblk):
        carry[b] = start
        start = lam_L * start + ends[b]
    y = z + carry[:, None] * powers
    return y.reshape(-1)[:m], start


def _langevin_numpy(state, A, dt, amp, xi, bin_len, out):
    M = np.eye(2) - dt * np.asarray(A)
    lam, V = np.linalg.eig(M)
    if np.linalg.cond(V) > 1e8:
        # defective drift: no usable modal basis
        _langevin_python(state, A, dt, amp, xi, bin_len, out)
        return
    Vinv = np.linalg.inv(V)
    y_start = Vinv @ state.astype(complex)
    kick = amp * math.sqrt(dt) * np.asarray(xi)
    x = np.zeros((2, xi.size))
    for mode in range(2):
        y, _ = _modal_scan(lam[mode], y_start[mode], Vinv[mode, 1] * kick)
        x += np.real(np.outer(V[:, mode], y))
    state[:] = x[:, -1]
    if bin_len > 0:
        nb = xi.size // bin_len
        xb = x[:, : nb * bin_len].reshape(2, nb, bin_len)
        out[:nb, 0] += xb[0].sum(axis=1)
        out[:nb, 1] += (xb[0] ** 2).sum(axis=1)
        out[:nb, 2] += xb[1].sum(axis=1)
        out[:nb, 3] += (xb[1] ** 2).sum(axis=1)
        out[:nb, 4] = xb[0, :, -1]
        out[:nb, 5] = xb[1, :, -1]


def langevin_kernel(backend: str | None = None):
    return _langevin_numba if resolve_backend(backend) == "numba" else _langevin_numpy


# --------------------------------------------------------------------------
# Gillespie jump process for the nonlinear rate equations
# --------------------------------------------------------------------------

def _gillespie_python(rate, counts, clock, exps, unifs, burn, t_max, width, acc, snap):
    """Run events until ``t_max`` or until the variates run out.

    ``rate = (j, beta, N_T, tau_sp, tau_cav)``; ``counts = [N, n]`` and
    ``clock = [t]`` are updated in place. Time after ``burn`` is binned into
    ``acc.shape[0]`` bins of ``width`` seconds; ``acc[b]`` accumulates
    ``(int N dt, int N^2 dt, int n dt, int n^2 dt)`` and ``snap[b]`` holds
    ``(N, n)`` at the end of bin ``b``. Returns the number of events fired.
    """
    j = rate[0]
    beta = rate[1]
    N_T = rate[2]
    inv_sp = 1.0 / rate[3]
    inv_cav = 1.0 / rate[4]
    g = 2.0 * beta * inv_sp
    N = counts[0]
    n = counts[1]
    t = clock[0]
    nbins = acc.shape[0]
    used = 0
    for k in range(exps.shape[0]):
        if t >= t_max:
            break
        a1 = j
        a2 = beta * N * inv_sp
        a3 = (1.0 - beta) * N * inv_sp
        a4 = g * N * n
        a5 = g * N_T * n
        a6 = n * inv_cav
        total = a1 + a2 + a3 + a4 + a5 + a6
        if total > 0.0:
            t_next = t + exps[k] / total
        else:
            t_next = t_max
        if t_next > t_max:
            t_next = t_max
        # time-weighted accumulation of the current state over [t, t_next]
        lo = t if t > burn else burn
        if t_next > lo:
            b = int((lo - burn) / width)
            if b >= nbins:
                b = nbins - 1
            while lo < t_next:
                edge = burn + (b + 1) * width
                if b == nbins - 1 or edge > t_next:
                    seg = t_next
                else:
                    seg = edge
                dur = seg - lo
                acc[b, 0] += dur * N
                acc[b, 1] += dur * N * N
                acc[b, 2] += dur * n
                acc[b, 3] += dur * n * n
                if seg == edge or seg == t_max:
                    snap[b, 0] = N
                    snap[b, 1] = n
                lo = seg
                if b < nbins - 1 and seg == edge:
                    b += 1
        t = t_next
        if t >= t_max:
            break
        used += 1
        r = unifs[k] * total
        if r < a1:
            N += 1
        elif r < a1 + a2:
            N -= 1
            n += 1
        elif r < a1 + a2 + a3:
            N -= 1
        elif r < a1 + a2 + a3 + a4:
            N -= 1
            n += 1
        elif r < a1 + a2 + a3 + a4 + a5:
            N += 1
            n -= 1
        elif n > 0:
            n -= 1
    counts[0] = N
    counts[1] = n
    clock[0] = t
    return used


_gillespie_numba = _jit(_gillespie_python)


def gillespie_kernel(backend: str | None = None):
    return _gillespie_numba if resolve_backend(backend) == "numba" else _gillespie_python
