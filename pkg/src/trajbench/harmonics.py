"""Real spherical harmonics and scaled modified spherical Bessel functions.

The harmonics follow one fixed convention: orthonormal real harmonics with
the Condon-Shortley phase omitted, evaluated by the standard three-term
recurrence on normalized associated Legendre functions. Components for one
point are laid out flat as ``Y[l*l + l + m]`` with m = -l..l, where positive
m carries cos(m*phi) and negative m carries sin(|m|*phi).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ive

MAX_L = 9


def real_sph_harm(l_max: int, vectors: np.ndarray) -> np.ndarray:
    """Evaluate Y_lm for l = 0..l_max at each direction in `vectors` (k, 3).

    Vectors need not be normalized; only the direction is used. Returns an
    array of shape (k, (l_max+1)^2).
    """
    if not 0 <= l_max <= MAX_L:
        raise ValueError(f"l_max must be in 0..{MAX_L}, got {l_max}")
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    r = np.linalg.norm(v, axis=1)
    safe_r = np.where(r > 0.0, r, 1.0)
    cos_t = np.clip(v[:, 2] / safe_r, -1.0, 1.0)
    sin_t = np.sqrt(1.0 - cos_t * cos_t)
    phi = np.arctan2(v[:, 1], v[:, 0])

    k = len(v)
    # Normalized associated Legendre P[l, m] without the Condon-Shortley phase.
    P = np.zeros((l_max + 1, l_max + 1, k))
    P[0, 0] = np.sqrt(1.0 / (4.0 * np.pi))
    for m in range(1, l_max + 1):
        P[m, m] = np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_t * P[m - 1, m - 1]
    for m in range(l_max):
        P[m + 1, m] = np.sqrt(2.0 * m + 3.0) * cos_t * P[m, m]
    for m in range(l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[l, m] = a * (cos_t * P[l - 1, m] - b * P[l - 2, m])

    out = np.zeros((k, (l_max + 1) ** 2))
    sqrt2 = np.sqrt(2.0)
    for l in range(l_max + 1):
        base = l * l + l
        out[:, base] = P[l, 0]
        for m in range(1, l + 1):
            out[:, base + m] = sqrt2 * P[l, m] * np.cos(m * phi)
            out[:, base - m] = sqrt2 * P[l, m] * np.sin(m * phi)
    return out


def scaled_mod_sph_bessel(l_max: int, x: np.ndarray) -> np.ndarray:
    """exp(-x) * i_l(x) for l = 0..l_max, elementwise over x >= 0.

    Folding the exponent into the Bessel function keeps the product
    exp(-a(r^2+d^2)) * i_l(2*a*r*d) representable as exp(-a(r-d)^2) times this
    function, which never overflows. Returns shape (len(x), l_max+1).
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros((flat.size, l_max + 1))
    pos = flat > 1e-12
    xp = flat[pos]
    if xp.size:
        orders = np.arange(l_max + 1)
        out[pos] = np.sqrt(np.pi / (2.0 * xp))[:, None] * ive(orders[None, :] + 0.5, xp[:, None])
    out[~pos, 0] = 1.0  # i_0(0) = 1, i_l(0) = 0 for l > 0
    return out.reshape(*x.shape, l_max + 1)
