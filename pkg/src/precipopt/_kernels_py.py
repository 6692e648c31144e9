"""Pure-Python (numpy) implementation of the hot kernels.

This module mirrors ``_kernels.pyx`` function by function and is used when the
compiled extension is unavailable or when a custom kinetics model has to be
called back from Python.

Index convention (0-based): ``c[k]`` approximates the concentration at
``t[k]``, ``k = 0..N``; control ``v[l]`` is constant on ``[t[l], t[l+1])``.
Per-interval quantities ``n[l] = N(c[l]) * delta[l]`` and
``g[l] = G0(c[l]) * delta[l]`` have length ``N``, and ``s[k] = g[0] + ... + g[k]``.
The size at ``t[k+1]`` of a particle nucleated at ``t[l]`` is
``(xn**a + a * (s[k] - s[l-1]))**(1/a)`` with ``a = 1 - beta`` and ``s[-1] = 0``.
"""

import math

import numpy as np


def total_concentration(v, t, delta, kr):
    """Closed-form total concentration at every grid point (length ``N+1``).

    Evaluates ``sum_l v[l] * (delta[l] - expm1(kr*delta[l])/kr * exp(-kr*(t[k]-t[l])))``
    with the lagged part carried forward one interval at a time.
    """
    n = len(v)
    ctot = np.zeros(n + 1)
    fed = 0.0
    lagged = 0.0
    for k in range(n):
        fed += v[k] * delta[k]
        lagged = (lagged + v[k] * math.expm1(kr * delta[k]) / kr) * math.exp(-kr * delta[k])
        ctot[k + 1] = fed - lagged
    return ctot


def forward(v, t, delta, kr, gamma1, gamma2, xn, beta, rates):
    """March the telescoped concentration recurrence.

    ``rates(c)`` returns ``(N, dN/dc, G0, dG0/dc)`` for a scalar concentration.
    Returns ``(c, ctot, n, g, s, dn, dg, bad)`` where ``bad`` is the first index
    with a non-finite value (``-1`` if none) and ``-2 - k`` flags a nonpositive
    characteristic base at step ``k``.
    """
    nt = len(v)
    a = 1.0 - beta
    xa = xn ** a
    p3 = 3.0 / a
    ctot = total_concentration(v, t, delta, kr)
    c = np.zeros(nt + 1)
    n = np.zeros(nt)
    g = np.zeros(nt)
    dn = np.zeros(nt)
    dg = np.zeros(nt)
    s = np.zeros(nt)
    # sprev[l] = s[l-1]
    sprev = np.zeros(nt)
    bad = -1
    for k in range(nt):
        nk, dnk, gk, dgk = rates(c[k])
        n[k] = nk * delta[k]
        dn[k] = dnk * delta[k]
        g[k] = gk * delta[k]
        dg[k] = dgk * delta[k]
        s[k] = (s[k - 1] if k > 0 else 0.0) + g[k]
        if k + 1 < nt:
            sprev[k + 1] = s[k]
        base = xa + a * (s[k] - sprev[: k + 1])
        if np.any(base[n[: k + 1] != 0.0] <= 0.0):
            return c, ctot, n, g, s, dn, dg, -2 - k
        c[k + 1] = gamma1 * ctot[k + 1] - gamma2 * np.dot(n[: k + 1], np.abs(base) ** p3)
        if not math.isfinite(c[k + 1]):
            return c, ctot, n, g, s, dn, dg, k + 1
    return c, ctot, n, g, s, dn, dg, bad


def moments(n, s, xn, beta, k, pmax=3):
    """Moments ``m_0..m_pmax`` at ``t[k]`` (sum over nucleation intervals ``l < k``)."""
    out = np.zeros(pmax + 1)
    if k <= 0:
        return out
    a = 1.0 - beta
    sprev = np.concatenate(([0.0], s[: k - 1]))
    size = (xn ** a + a * (s[k - 1] - sprev)) ** (1.0 / a)
    w = n[:k]
    for p in range(pmax + 1):
        out[p] = np.dot(w, size ** p)
    return out


def adjoint(v, t, delta, kr, gamma1, gamma2, xn, beta, n, g, s, dn, dg, dj):
    """Reverse sweep for the gradient of J(m0, m1, m2) at the final time.

    ``dj = (dJ/dm0, dJ/dm1, dJ/dm2)``. Returns ``(grad_v, lam)`` where ``lam``
    (length ``N+1``) solves the transposed unit-triangular state Jacobian.
    """
    nt = len(v)
    a = 1.0 - beta
    xa = xn ** a
    p3 = 3.0 / a
    sprev = np.concatenate(([0.0], s[:-1]))
    last = nt - 1

    # dJ/dc[j] for j <= N-1 through the final moments (sizes at t[N])
    zf = xa + a * (s[last] - sprev)
    djdc = np.zeros(nt + 1)
    for p, coeff in enumerate(dj):
        if coeff == 0.0:
            continue
        ep = zf ** (p / a)
        dep = p * zf ** (p / a - 1.0)
        djdc[:nt] += coeff * (dn * ep + dg * np.cumsum(n * dep))

    lam = np.zeros(nt + 1)
    q = np.zeros(nt)
    for j in range(nt - 1, -1, -1):
        # fold row k = j of the recurrence into q: q[l] += lam[j+1] * H'(s[j] - s[l-1])
        zj = xa + a * (s[j] - sprev[: j + 1])
        q[: j + 1] += lam[j + 1] * (3.0 * zj ** (p3 - 1.0))
        # term through n[j]: sum_{k>=j} lam[k+1] * H(s[k] - s[j-1])
        zk = xa + a * (s[j:] - sprev[j])
        tn = np.dot(lam[j + 1:], zk ** p3)
        tg = np.dot(n[: j + 1], q[: j + 1])
        lam[j] = djdc[j] - gamma2 * (dn[j] * tn + dg[j] * tg)

    grad = np.zeros(nt)
    total = 0.0
    decayed = 0.0
    for i in range(nt - 1, -1, -1):
        total += lam[i + 1]
        decayed = (decayed + lam[i + 1]) * math.exp(-kr * delta[i])
        grad[i] = gamma1 * (delta[i] * total - math.expm1(kr * delta[i]) / kr * decayed)
    return grad, lam
