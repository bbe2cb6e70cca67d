"""Compiled inner loops.

The qubit state is carried as a Bloch vector (x, y, z) with
``rho11 = (1+z)/2`` and ``rho12 = (x - i y)/2``. Writing the Gaussian outcome
densities as ``P1,2 = g * exp(-/+ a)`` with ``a = sqrt(gamma_ci) * I * tau`` and a
common factor ``g``, the Bayesian update becomes

    n  = cosh(a) - z sinh(a)
    z' = (z cosh(a) - sinh(a)) / n
    (x', y') = D * (x, y) / n            (then the no-information phase)

and the outcome density is ``g * n``. The Rabi drive is a fixed rotation
matrix per step.
"""

import math

import numba as nb
import numpy as np

# bins between log() flushes of the running likelihood product; n stays
# within exp(+-|a|) per bin so the product cannot overflow in this many bins
_FLUSH = 32


def rotation_matrix(omega: float, b_stark: float, t: float) -> np.ndarray:
    """Bloch-vector rotation generated by ``H = (omega/2) sx + (b/2) sz`` over ``t``."""
    w = math.hypot(omega, b_stark)
    if w == 0.0:
        return np.eye(3)
    n = np.array([omega / w, 0.0, b_stark / w])
    k = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    th = w * t
    return np.eye(3) + math.sin(th) * k + (1.0 - math.cos(th)) * (k @ k)


@nb.njit(cache=True, nogil=True)
def generate_bins(noise, nsub, dt, s, damp, gba, rot, state, currents, states, b0, store_states):
    """Advance ``state`` over ``noise.size // nsub`` bins of ``nsub`` steps of ``dt``.

    Writes bin-averaged currents to ``currents[b0:]`` and, if ``store_states``,
    the post-bin Bloch vector to ``states[b0:]``. Returns -1, or the global
    step index at which the state left the Bloch ball.
    """
    x = state[0]
    y = state[1]
    z = state[2]
    inv_sqrt_dt = 1.0 / math.sqrt(dt)
    nbins = noise.size // nsub
    use_phase = gba != 0.0
    for b in range(nbins):
        acc = 0.0
        base = b * nsub
        for k in range(nsub):
            i = -s * z + noise[base + k] * inv_sqrt_dt
            acc += i
            e = math.exp(s * i * dt)
            ie = 1.0 / e
            ch = 0.5 * (e + ie)
            sh = 0.5 * (e - ie)
            inv_n = 1.0 / (ch - z * sh)
            z = (z * ch - sh) * inv_n
            x = x * damp * inv_n
            y = y * damp * inv_n
            if use_phase:
                th = gba * i * dt
                c = math.cos(th)
                sn = math.sin(th)
                x, y = x * c + y * sn, y * c - x * sn
            x2 = rot[0, 0] * x + rot[0, 1] * y + rot[0, 2] * z
            y2 = rot[1, 0] * x + rot[1, 1] * y + rot[1, 2] * z
            z2 = rot[2, 0] * x + rot[2, 1] * y + rot[2, 2] * z
            x = x2
            y = y2
            z = z2
        r2 = x * x + y * y + z * z
        if not (r2 <= 1.0 + 1e-8):
            return (b0 + b) * nsub + nsub - 1
        currents[b0 + b] = acc / nsub
        if store_states:
            states[b0 + b, 0] = x
            states[b0 + b, 1] = y
            states[b0 + b, 2] = z
    state[0] = x
    state[1] = y
    state[2] = z
    return -1


@nb.njit(cache=True, nogil=True)
def loglik_grid(currents, tau, s, damp, gba, rots, x0, y0, z0, out):
    """Replay the filter for every rotation in ``rots`` and write
    ``sum_j ln N_j + (N/2) ln(2 pi / tau)`` into ``out``.

    Returns -1, or the bin index at which the accumulation became non-finite.
    """
    g = rots.shape[0]
    x = np.full(g, x0)
    y = np.full(g, y0)
    z = np.full(g, z0)
    prod = np.ones(g)
    for k in range(g):
        out[k] = 0.0
    const = 0.0
    use_phase = gba != 0.0
    nb_ = currents.size
    for j in range(nb_):
        cur = currents[j]
        const -= 0.5 * (cur * cur + s * s) * tau
        e = math.exp(s * cur * tau)
        ie = 1.0 / e
        ch = 0.5 * (e + ie)
        sh = 0.5 * (e - ie)
        if use_phase:
            th = gba * cur * tau
            c = math.cos(th)
            sn = math.sin(th)
        for k in range(g):
            zk = z[k]
            n = ch - zk * sh
            prod[k] *= n
            inv_n = 1.0 / n
            zz = (zk * ch - sh) * inv_n
            xx = x[k] * damp * inv_n
            yy = y[k] * damp * inv_n
            if use_phase:
                xx, yy = xx * c + yy * sn, yy * c - xx * sn
            r = rots[k]
            x[k] = r[0, 0] * xx + r[0, 1] * yy + r[0, 2] * zz
            y[k] = r[1, 0] * xx + r[1, 1] * yy + r[1, 2] * zz
            z[k] = r[2, 0] * xx + r[2, 1] * yy + r[2, 2] * zz
        if (j % _FLUSH) == _FLUSH - 1 or j == nb_ - 1:
            for k in range(g):
                p = prod[k]
                if not (p > 0.0 and p < np.inf):
                    return j
                out[k] += math.log(p)
                prod[k] = 1.0
    if not math.isfinite(const):
        return nb_ - 1
    for k in range(g):
        out[k] += const
    return -1
