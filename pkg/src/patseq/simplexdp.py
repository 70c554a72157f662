"""Ordered-simplex product integrals for piecewise-constant data.

Evaluates integrals of the form

    I = integral over {0 < x_1 < ... < x_k < 1} of prod_i phi_{b_i}(x_i) dx

where b_i is the i-th letter of a binary pattern and phi_0, phi_1 are
piecewise constant on a common cell decomposition of [0,1], possibly with
point atoms (an atom of mass M contributes M^c / c! for a run of c
consecutive letters placed on it).

Everything is driven by a flat event list: event e has a weight W[e]
(cell width, or atom mass) and per-letter values V0[e], V1[e].  A run of
c consecutive letters placed in event e contributes

    W[e]^c / c! * prod over those letters of (V1[e] if letter else V0[e]).

Cells of a density f use (W, V0, V1) = (width, 1-f, f); the feasibility
functional uses (width, g, 1) for cells and (mass, 1, 0) for atoms.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def dp_value(bits, W, V0, V1):
    """Ordered integral (without the k! factor) over the event chain."""
    k = bits.shape[0]
    dp = np.zeros(k + 1)
    dp[0] = 1.0
    new = np.zeros(k + 1)
    for e in range(W.shape[0]):
        w, v0, v1 = W[e], V0[e], V1[e]
        for j2 in range(k + 1):
            acc = dp[j2]
            wc = 1.0
            prod = 1.0
            for c in range(1, j2 + 1):
                wc *= w / c
                prod *= v1 if bits[j2 - c] == 1 else v0
                acc += dp[j2 - c] * wc * prod
            new[j2] = acc
        dp[:] = new
    return dp[k]


def dp_value_py(bits, W, V0, V1):
    """Pure-Python mirror of dp_value, used to cross-check the kernel."""
    k = len(bits)
    dp = [0.0] * (k + 1)
    dp[0] = 1.0
    for e in range(len(W)):
        w, v0, v1 = W[e], V0[e], V1[e]
        new = [0.0] * (k + 1)
        for j2 in range(k + 1):
            acc = dp[j2]
            wc = 1.0
            prod = 1.0
            for c in range(1, j2 + 1):
                wc *= w / c
                prod *= v1 if bits[j2 - c] == 1 else v0
                acc += dp[j2 - c] * wc * prod
            new[j2] = acc
        dp = new
    return dp[k]


@njit(cache=True)
def dp_value_grad(bits, W, V0, V1):
    """Value plus gradients w.r.t. every event's W, V0 and V1.

    Forward-backward sweep over the event chain; cost O(E * k^2).
    """
    k = bits.shape[0]
    E = W.shape[0]
    fwd = np.zeros((E + 1, k + 1))
    fwd[0, 0] = 1.0
    for e in range(E):
        w, v0, v1 = W[e], V0[e], V1[e]
        for j2 in range(k + 1):
            acc = fwd[e, j2]
            wc = 1.0
            prod = 1.0
            for c in range(1, j2 + 1):
                wc *= w / c
                prod *= v1 if bits[j2 - c] == 1 else v0
                acc += fwd[e, j2 - c] * wc * prod
            fwd[e + 1, j2] = acc

    bwd = np.zeros((E + 1, k + 1))
    bwd[E, k] = 1.0
    for e in range(E - 1, -1, -1):
        w, v0, v1 = W[e], V0[e], V1[e]
        for j in range(k + 1):
            acc = bwd[e + 1, j]
            wc = 1.0
            prod = 1.0
            for c in range(1, k - j + 1):
                wc *= w / c
                prod *= v1 if bits[j + c - 1] == 1 else v0
                acc += wc * prod * bwd[e + 1, j + c]
            bwd[e, j] = acc

    dW = np.zeros(E)
    dV0 = np.zeros(E)
    dV1 = np.zeros(E)
    for e in range(E):
        w, v0, v1 = W[e], V0[e], V1[e]
        gw = 0.0
        g0 = 0.0
        g1 = 0.0
        for j in range(k + 1):
            fj = fwd[e, j]
            if fj == 0.0:
                continue
            wc = 1.0   # W^c / c!
            p0 = 1.0   # v0^z over the 0-letters in the run
            p0m = 1.0  # v0^(z-1)
            p1 = 1.0   # v1^o over the 1-letters
            p1m = 1.0  # v1^(o-1)
            z = 0
            o = 0
            for c in range(1, k - j + 1):
                wcm = wc          # W^(c-1) / (c-1)!
                wc = wc * w / c
                if bits[j + c - 1] == 1:
                    p1m = p1
                    p1 = p1 * v1
                    o += 1
                else:
                    p0m = p0
                    p0 = p0 * v0
                    z += 1
                b = bwd[e + 1, j + c]
                if b == 0.0:
                    continue
                fb = fj * b
                gw += fb * wcm * p0 * p1
                if z > 0:
                    g0 += fb * wc * z * p0m * p1
                if o > 0:
                    g1 += fb * wc * o * p1m * p0
        dW[e] = gw
        dV0[e] = g0
        dV1[e] = g1
    return fwd[E, k], dW, dV0, dV1
