"""
Fundamentallösung der Laplace-Gleichung in 3D
G(r) = 1/(4π|r|), ∂G/∂n = −(r·n)/(4π|r|³) mit r = x − x₀
"""

import numpy as np

FOUR_PI = 4.0 * np.pi


def green_function(r) -> np.ndarray:
    """
    Fundamentallösung für Abstandsvektoren

    Args:
        r: Abstandsvektor(en) (..., 3) in m

    Returns:
        G in 1/m, Form (...)

    Raises:
        ValueError: Abstand null
    """
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0.0):
        raise ValueError("Greensche Funktion bei Abstand null ausgewertet")
    return 1.0 / (FOUR_PI * dist)


def green_normal_gradient(r, n) -> np.ndarray:
    """
    Normalableitung der Fundamentallösung am Integrationspunkt

    Args:
        r: Abstandsvektor(en) x − x₀ (..., 3)
        n: Einheitsnormale(n) (..., 3)

    Returns:
        ∂G/∂n in 1/m²
    """
    r = np.asarray(r, dtype=float)
    n = np.asarray(n, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0.0):
        raise ValueError("Normalableitung bei Abstand null ausgewertet")
    return -np.sum(r * n, axis=-1) / (FOUR_PI * dist ** 3)


def kernels_unchecked(r: np.ndarray, n: np.ndarray):
    """G und ∂G/∂n ohne Nullprüfung (Aufrufer maskiert singuläre Paare)"""
    dist2 = np.einsum('...d,...d->...', r, r)
    dist2 = np.where(dist2 > 0.0, dist2, np.inf)
    inv = 1.0 / np.sqrt(dist2)
    G = inv / FOUR_PI
    dG = -np.einsum('...d,...d->...', r, n) * inv ** 3 / FOUR_PI
    return G, dG
