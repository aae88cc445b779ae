"""Orthonormal associated Legendre functions by three-term recurrence"""

import math
from typing import Tuple

import numpy as np


def normalized_legendre(lmax: int, mmax: int, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal associated Legendre functions and their colatitude derivatives.

    The functions are normalized so that ``P[m, l] * exp(i m phi)`` has unit
    L2 norm on the sphere of area 4*pi. No Condon-Shortley phase.

    Parameters
    ----------
    lmax : int
        Maximum degree.
    mmax : int
        Maximum order, ``mmax <= lmax``.
    theta : array_like
        Colatitudes in ``[0, pi]``.

    Returns
    -------
    P, dP : ndarray
        Arrays of shape ``(mmax + 1, lmax + 1, len(theta))``; entries with
        ``l < m`` are zero.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = np.cos(theta)
    s = np.sin(theta)
    npts = theta.shape[0]

    P = np.zeros((mmax + 1, lmax + 1, npts))
    dP = np.zeros_like(P)

    pmm = np.full(npts, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(mmax + 1):
        if m > 0:
            pmm = pmm * math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s
        P[m, m] = pmm
        if m + 1 <= lmax:
            P[m, m + 1] = math.sqrt(2.0 * m + 3.0) * x * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[m, l] = a * (x * P[m, l - 1] - b * P[m, l - 2])

    # d/dtheta from (1 - x^2) dP/dx = -l x P_l + (l + m) P_{l-1}, rewritten for
    # the orthonormal family; poles are only reached by off-grid evaluation
    s_safe = np.maximum(s, 1e-12)
    for m in range(mmax + 1):
        for l in range(m, lmax + 1):
            term = l * x * P[m, l]
            if l > m:
                c = math.sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0)) * math.sqrt(l * l - m * m)
                term = term - c * P[m, l - 1]
            dP[m, l] = term / s_safe

    return P, dP
