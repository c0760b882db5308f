"""Compiled slice-propagation loops.

Within a slice of width h and constant V the solution of
-psi''/2 + V psi = k^2/2 psi advances as

    [psi ]      [ cos z        h sin(z)/z ] [psi ]
    [psi'] <-   [ -q^2 h sin(z)/z   cos z ] [psi']

with q^2 = k^2 - 2V and z = q h. Both entries are even in z, so the
propagator is an entire function of k and no square-root branch enters.
"""

import cmath

import numpy as np
from numba import njit

_RENORM = 1e100


@njit(cache=True)
def _cos_sinc(z2):
    # cos z and sin(z)/z from z^2
    if abs(z2) < 1e-8:
        return 1.0 - z2 / 2.0 + z2 * z2 / 24.0, 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    z = cmath.sqrt(z2)
    return cmath.cos(z), cmath.sin(z) / z


@njit(cache=True)
def _one_minus_sinc2_over_z2(z2):
    # (1 - sin(2z)/(2z)) / z^2, finite at z = 0
    if abs(z2) < 2.5e-3:
        return 2.0 / 3.0 - 2.0 * z2 / 15.0 + 4.0 * z2 * z2 / 315.0 - 2.0 * z2 * z2 * z2 / 2835.0
    z = cmath.sqrt(z2)
    return (1.0 - cmath.sin(2.0 * z) / (2.0 * z)) / z2


@njit(cache=True)
def _dsinc_du(z2, c, sc):
    # d/du of sin(z)/z with u = z^2
    if abs(z2) < 1e-3:
        return -1.0 / 6.0 + z2 / 60.0 - z2 * z2 / 1680.0 + z2 * z2 * z2 / 90720.0
    return (c - sc) / (2.0 * z2)


@njit(cache=True)
def transfer(k, widths, values):
    """Transfer matrices from -L to L for every k.

    Returns (m, logscale) with m[:, 0..3] = m11, m12, m21, m22 and the true
    matrix equal to m * exp(logscale).
    """
    nk = k.shape[0]
    out = np.empty((nk, 4), dtype=np.complex128)
    logs = np.zeros(nk)
    for i in range(nk):
        k2 = k[i] * k[i]
        a11 = 1.0 + 0j
        a12 = 0.0 + 0j
        a21 = 0.0 + 0j
        a22 = 1.0 + 0j
        lg = 0.0
        for j in range(widths.shape[0]):
            h = widths[j]
            q2 = k2 - 2.0 * values[j]
            c, sc = _cos_sinc(q2 * h * h)
            s = h * sc
            b11 = c * a11 + s * a21
            b12 = c * a12 + s * a22
            b21 = -q2 * s * a11 + c * a21
            b22 = -q2 * s * a12 + c * a22
            a11, a12, a21, a22 = b11, b12, b21, b22
            big = max(abs(a11), abs(a12), abs(a21), abs(a22))
            if big > _RENORM:
                a11 /= big
                a12 /= big
                a21 /= big
                a22 /= big
                lg += np.log(big)
        out[i, 0] = a11
        out[i, 1] = a12
        out[i, 2] = a21
        out[i, 3] = a22
        logs[i] = lg
    return out, logs


@njit(cache=True)
def propagate_state(k, widths, values, psi0, dpsi0):
    """Carry (psi, psi') across all slices.

    Returns psi and psi' at the n + 1 slice edges and the exact integral of
    psi^2 (no conjugation) over [-L, L] for the sliced potential.
    """
    n = widths.shape[0]
    psi = np.empty(n + 1, dtype=np.complex128)
    dpsi = np.empty(n + 1, dtype=np.complex128)
    psi[0] = psi0
    dpsi[0] = dpsi0
    k2 = k * k
    acc = 0.0 + 0j
    for j in range(n):
        h = widths[j]
        q2 = k2 - 2.0 * values[j]
        z2 = q2 * h * h
        c, sc = _cos_sinc(z2)
        s = h * sc
        p, d = psi[j], dpsi[j]
        # psi(s') = p cos(q s') + d sin(q s')/q on [0, h]
        _, sc2 = _cos_sinc(4.0 * z2)
        i_cc = 0.5 * h * (1.0 + sc2)
        i_cs = 0.5 * h * h * sc * sc
        i_ss = 0.5 * h * h * h * _one_minus_sinc2_over_z2(z2)
        acc += p * p * i_cc + 2.0 * p * d * i_cs + d * d * i_ss
        psi[j + 1] = c * p + s * d
        dpsi[j + 1] = -q2 * s * p + c * d
    return psi, dpsi, acc


@njit(cache=True)
def transfer_derivative(k, widths, values):
    """Transfer matrices and their exact k-derivatives, sharing one log-scale.

    Returns (m, dm, logscale) laid out like :func:`transfer`.
    """
    nk = k.shape[0]
    out = np.empty((nk, 4), dtype=np.complex128)
    dout = np.empty((nk, 4), dtype=np.complex128)
    logs = np.zeros(nk)
    for i in range(nk):
        kk = k[i]
        k2 = kk * kk
        a = np.array([1.0 + 0j, 0j, 0j, 1.0 + 0j])
        da = np.zeros(4, dtype=np.complex128)
        lg = 0.0
        for j in range(widths.shape[0]):
            h = widths[j]
            z2 = (k2 - 2.0 * values[j]) * h * h
            c, sc = _cos_sinc(z2)
            du = 2.0 * kk * h * h
            dc = -0.5 * sc * du
            dsc = _dsinc_du(z2, c, sc) * du
            b11 = c
            b12 = h * sc
            b21 = -z2 * sc / h
            b22 = c
            db11 = dc
            db12 = h * dsc
            db21 = -(du * sc + z2 * dsc) / h
            db22 = dc
            n11 = b11 * a[0] + b12 * a[2]
            n12 = b11 * a[1] + b12 * a[3]
            n21 = b21 * a[0] + b22 * a[2]
            n22 = b21 * a[1] + b22 * a[3]
            d11 = db11 * a[0] + db12 * a[2] + b11 * da[0] + b12 * da[2]
            d12 = db11 * a[1] + db12 * a[3] + b11 * da[1] + b12 * da[3]
            d21 = db21 * a[0] + db22 * a[2] + b21 * da[0] + b22 * da[2]
            d22 = db21 * a[1] + db22 * a[3] + b21 * da[1] + b22 * da[3]
            a[0], a[1], a[2], a[3] = n11, n12, n21, n22
            da[0], da[1], da[2], da[3] = d11, d12, d21, d22
            big = max(abs(n11), abs(n12), abs(n21), abs(n22))
            if big > _RENORM:
                for q in range(4):
                    a[q] /= big
                    da[q] /= big
                lg += np.log(big)
        for q in range(4):
            out[i, q] = a[q]
            dout[i, q] = da[q]
        logs[i] = lg
    return out, dout, logs
