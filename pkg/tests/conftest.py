import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def deboor(knots, coeffs, u, degree=3):
    """Independent de Boor evaluation oracle (Cox-de Boor recursion)."""
    knots = np.asarray(knots, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n = len(coeffs)
    hi = knots[-degree - 1]
    if u >= hi:
        k = int(np.searchsorted(knots, hi, side="left")) - 1
    else:
        k = int(np.searchsorted(knots, u, side="right")) - 1
    k = min(max(k, degree), n - 1)
    d = [coeffs[j].astype(float).copy() for j in range(k - degree, k + 1)]
    for r in range(1, degree + 1):
        for j in range(degree, r - 1, -1):
            i = j + k - degree
            den = knots[i + degree - r + 1] - knots[i]
            alpha = 0.0 if den == 0.0 else (u - knots[i]) / den
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[degree]


def deboor_surface(knots_u, knots_v, net, u, v, degree=3):
    """Tensor-product de Boor: apply the recursion in v, then in u."""
    net = np.asarray(net, dtype=float)
    rows = np.array([deboor(knots_v, net[i], v, degree) for i in range(net.shape[0])])
    return deboor(knots_u, rows, u, degree)


def sylvester_resultant(p, q):
    """Resultant of two scalar polynomials via the Sylvester matrix."""
    p = np.trim_zeros(np.asarray(p, dtype=float), "b")
    q = np.trim_zeros(np.asarray(q, dtype=float), "b")
    m, n = len(p) - 1, len(q) - 1
    if m < 1 or n < 1:
        return np.nan
    s = np.zeros((m + n, m + n))
    for i in range(n):
        s[i, i:i + m + 1] = p[::-1]
    for i in range(m):
        s[n + i, i:i + n + 1] = q[::-1]
    return float(np.linalg.det(s))


def factorable_oracle(q, tol=1e-8):
    """Resultant/rank oracle: does the vector quadratic factor as ell*gamma?

    True iff the quadratic part vanishes (gamma constant) or all component
    pairs share a root (pairwise resultants ~ 0) and that root is real.
    """
    q = np.asarray(q, dtype=float)
    scale = max(np.abs(q).max(), 1e-300)
    qn = q / scale
    if np.linalg.norm(qn[2]) <= tol:
        return True
    comps = [qn[:, i] for i in range(3)]
    live = [c for c in comps if np.abs(c).max() > tol]
    for i in range(len(live)):
        for j in range(i + 1, len(live)):
            r = sylvester_resultant(live[i], live[j])
            norm = (np.abs(live[i]).max() * np.abs(live[j]).max()) ** (
                (len(np.trim_zeros(live[i], "b")) + len(np.trim_zeros(live[j], "b")) - 2) / 2.0)
            if not np.isfinite(r) or abs(r) > 1e-7 * max(norm, 1e-30) ** 2:
                return False
    lead = int(np.argmax(np.abs(qn[2])))
    a, b, c = qn[2, lead], qn[1, lead], qn[0, lead]
    disc = b * b - 4 * a * c
    return disc >= -1e-12
