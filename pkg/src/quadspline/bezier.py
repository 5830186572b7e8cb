"""Bicubic Bezier / B-spline algebra on the canonical double-knot structure.

The whole package works over one knot vector per parameter direction,

    [0, 0, 0, 0, 1/3, 1/3, 2/3, 2/3, 1, 1, 1, 1]

i.e. a bicubic tensor-product B-spline whose restriction to each third of the
domain is a bicubic Bezier piece and whose pieces join parametrically C1 at
the two interior double knots.  This module holds the evaluation,
differentiation, knot-insertion and continuity machinery everything else
builds on.

Conventions
-----------
* Piecewise cubics over [0,1] are stored as an array of Bezier points of
  shape (3, 4, d): segment index, control point index, coordinate.  Shared
  segment endpoints are duplicated.
* Power-basis coefficients are stored lowest degree first.
* Global-parameter derivatives of a segment pick up a factor 3 per order
  (each segment spans 1/3 of the parameter interval).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

KNOT_VECTOR = np.array([0.0, 0.0, 0.0, 0.0, 1 / 3, 1 / 3, 2 / 3, 2 / 3, 1.0, 1.0, 1.0, 1.0])
BEZIER_KNOTS = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0])
DEGREE = 3
BREAKS = np.array([0.0, 1 / 3, 2 / 3, 1.0])
SEG_LEN = 1 / 3


class KnotError(ValueError):
    """Unsupported knot vector."""


# ---------------------------------------------------------------------------
# cubic Bernstein <-> power basis (local parameter s in [0, 1])

_BEZ2POW = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [-3.0, 3.0, 0.0, 0.0],
    [3.0, -6.0, 3.0, 0.0],
    [-1.0, 3.0, -3.0, 1.0],
])
_POW2BEZ = np.linalg.inv(_BEZ2POW)


def bezier_to_power(pts):
    """Power coefficients (rows s^0..s^3) of a cubic from its Bezier points."""
    return _BEZ2POW @ np.asarray(pts, dtype=float)


def power_to_bezier(coeffs):
    """Bezier points of a polynomial of degree <= 3 from power coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] > 4:
        raise ValueError("degree above 3")
    if coeffs.shape[0] < 4:
        pad = np.zeros((4 - coeffs.shape[0],) + coeffs.shape[1:])
        coeffs = np.concatenate([coeffs, pad], axis=0)
    return _POW2BEZ @ coeffs


def poly_eval(coeffs, t):
    """Evaluate a power-basis polynomial; vector-valued if coeffs is 2D."""
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    if coeffs.ndim == 1:
        out = np.zeros_like(t, dtype=float)
        for c in coeffs[::-1]:
            out = out * t + c
        return out
    out = np.zeros(t.shape + coeffs.shape[1:])
    for c in coeffs[::-1]:
        out = out * t[..., None] + c
    return out


def poly_derive(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] <= 1:
        return np.zeros((1,) + coeffs.shape[1:])
    k = np.arange(1, coeffs.shape[0], dtype=float)
    return coeffs[1:] * k.reshape((-1,) + (1,) * (coeffs.ndim - 1))


def poly_mul(p, q):
    """Product of two scalar power-basis polynomials."""
    return np.convolve(np.asarray(p, dtype=float), np.asarray(q, dtype=float))


def poly_compose_affine(coeffs, a, b):
    """Power coefficients of p(a + b*t) from those of p(u); 1D or 2D coeffs."""
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros_like(coeffs)
    for c in coeffs[::-1]:
        shifted = np.zeros_like(out)
        shifted[1:] = out[:-1]
        out = a * out + b * shifted
        out[0] += c
    return out


# ---------------------------------------------------------------------------
# B-spline knot insertion (Boehm) and piece extraction

def insert_knot(knots, coeffs, u):
    """Insert one knot into a degree-3 spline; returns (knots, coeffs)."""
    knots = np.asarray(knots, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    p = DEGREE
    if u < knots[p] - 1e-14 or u > knots[-p - 1] + 1e-14:
        raise KnotError(f"knot {u} outside domain")
    k = int(np.searchsorted(knots, u, side="right")) - 1
    k = min(max(k, p), len(coeffs) - 1)
    new = np.empty((len(coeffs) + 1,) + coeffs.shape[1:])
    new[: k - p + 1] = coeffs[: k - p + 1]
    for i in range(k - p + 1, k + 1):
        den = knots[i + p] - knots[i]
        a = 0.0 if den == 0.0 else (u - knots[i]) / den
        new[i] = (1.0 - a) * coeffs[i - 1] + a * coeffs[i]
    new[k + 1:] = coeffs[k:]
    return np.insert(knots, k + 1, u), new


def _multiplicity(knots, u):
    return int(np.sum(np.abs(np.asarray(knots) - u) < 1e-13))


def spline_to_pieces_1d(knots, coeffs):
    """Bezier segments of a cubic spline curve, via knot insertion.

    Returns (breaks, pieces); pieces[i] holds the (4, ...) Bezier points of
    the polynomial on [breaks[i], breaks[i+1]].
    """
    knots = np.asarray(knots, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    lo, hi = knots[DEGREE], knots[-DEGREE - 1]
    interior = np.unique(knots[(knots > lo + 1e-14) & (knots < hi - 1e-14)])
    for u in interior:
        for _ in range(DEGREE - _multiplicity(knots, u)):
            knots, coeffs = insert_knot(knots, coeffs, u)
    breaks = np.concatenate([[lo], interior, [hi]])
    pieces = np.array([coeffs[3 * i: 3 * i + 4] for i in range(len(breaks) - 1)])
    return breaks, pieces


def _canonical_kind(knots):
    knots = np.asarray(knots, dtype=float)
    if knots.shape == KNOT_VECTOR.shape and np.allclose(knots, KNOT_VECTOR, atol=1e-12):
        return "double"
    if knots.shape == BEZIER_KNOTS.shape and np.allclose(knots, BEZIER_KNOTS, atol=1e-12):
        return "bezier"
    raise KnotError("only the canonical double-knot vector and the clamped "
                    "no-interior-knot vector are supported")


def _build_spline_to_flat():
    """8 -> 10 matrix from spline coefficients to distinct pw-Bezier points."""
    cols = []
    for i in range(8):
        e = np.zeros(8)
        e[i] = 1.0
        _, pieces = spline_to_pieces_1d(KNOT_VECTOR, e)
        cols.append(np.concatenate([pieces[0], pieces[1][1:], pieces[2][1:]]))
    return np.array(cols).T


_SPL2FLAT = _build_spline_to_flat()          # (10, 8)
_FLAT2SPL = np.linalg.pinv(_SPL2FLAT)        # (8, 10), exact on C1 data


def pw_to_flat(pw):
    """(3,4,d) piecewise Bezier points -> (10,d) distinct points (C0 assumed)."""
    pw = np.asarray(pw, dtype=float)
    return np.concatenate([pw[0], pw[1][1:], pw[2][1:]], axis=0)


def flat_to_pw(flat):
    flat = np.asarray(flat, dtype=float)
    return np.stack([flat[0:4], flat[3:7], flat[6:10]])


def spline_from_pw(pw, tol=1e-9):
    """Spline coefficients (8,d) of C1 piecewise-Bezier data; checks fit."""
    flat = pw_to_flat(pw)
    coeffs = _FLAT2SPL @ flat
    resid = np.abs(_SPL2FLAT @ coeffs - flat).max()
    scale = max(np.abs(flat).max(), 1.0)
    if resid > tol * scale:
        raise ValueError(f"piecewise data is not C1-consistent (residual {resid:.3e})")
    return coeffs


def pw_from_spline(coeffs):
    """(8,d) spline coefficients -> (3,4,d) piecewise Bezier points."""
    return flat_to_pw(_SPL2FLAT @ np.asarray(coeffs, dtype=float))


# ---------------------------------------------------------------------------
# piecewise-cubic curves over [0,1] with breaks at 1/3, 2/3

def _segment_index(u):
    if u < BREAKS[1]:
        return 0
    if u < BREAKS[2]:
        return 1
    return 2


def pw_eval(pw, u, der=0):
    """Evaluate piecewise cubic (or its global-parameter derivative) at u."""
    pw = np.asarray(pw, dtype=float)
    u = float(u)
    i = _segment_index(u)
    s = (u - BREAKS[i]) / SEG_LEN
    coeffs = bezier_to_power(pw[i])
    for _ in range(der):
        coeffs = poly_derive(coeffs)
    return poly_eval(coeffs, np.asarray(s)) * 3.0 ** der


def pw_jets_at_knot(pw, which, side):
    """One-sided (value, d1, d2, d3) of a piecewise cubic at break 1 or 2.

    Derivatives are with respect to the global parameter; `side` is '-' for
    the left segment, '+' for the right one.
    """
    pw = np.asarray(pw, dtype=float)
    seg = pw[which - 1] if side == "-" else pw[which]
    s = 1.0 if side == "-" else 0.0
    coeffs = bezier_to_power(seg)
    out = []
    for der in range(4):
        out.append(poly_eval(coeffs, np.asarray(s)) * 3.0 ** der)
        coeffs = poly_derive(coeffs)
    return out


def pw_c1_residual(pw):
    """Largest first-derivative jump of a piecewise cubic at its two breaks."""
    res = 0.0
    for k in (1, 2):
        a = pw_jets_at_knot(pw, k, "-")[1]
        b = pw_jets_at_knot(pw, k, "+")[1]
        res = max(res, float(np.abs(a - b).max()))
    return res


def pw_segment_power_global(pw, i):
    """Power coefficients in the global parameter of segment i of a pw cubic."""
    local = bezier_to_power(np.asarray(pw, dtype=float)[i])
    return poly_compose_affine(local, -3.0 * BREAKS[i], 3.0)


# ---------------------------------------------------------------------------
# patches

def _bernstein_weights(t, der):
    """Weights w with sum_i w_i b_i = d^der/dt^der of the cubic at t."""
    cols = _BEZ2POW.copy()
    for _ in range(der):
        cols = np.vstack([cols[1:] * np.arange(1, cols.shape[0])[:, None],
                          ])
    powers = np.array([t ** j for j in range(cols.shape[0])])
    return powers @ cols


@dataclass(frozen=True)
class BezierPatch:
    """One bicubic Bezier piece over the unit square; net[i][j] ~ (u_i, v_j)."""

    net: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "net", np.asarray(self.net, dtype=float))
        if self.net.shape != (4, 4, 3):
            raise ValueError("BezierPatch net must have shape (4, 4, 3)")

    def eval(self, u, v, du=0, dv=0):
        """Exact partial derivative d_u^du d_v^dv of the patch at (u, v)."""
        if not (0 <= du <= 3 and 0 <= dv <= 3 and du + dv <= 6):
            raise ValueError("derivative order out of range")
        wu = _bernstein_weights(float(u), du)
        wv = _bernstein_weights(float(v), dv)
        return np.einsum("i,j,ijk->k", wu, wv, self.net)

    def corner_regularity(self):
        """Min norm of the corner cross products d2 x d1 (Def. 2 regularity)."""
        vals = []
        for u, v in ((0, 0), (1, 0), (0, 1), (1, 1)):
            a = self.eval(u, v, 1, 0)
            b = self.eval(u, v, 0, 1)
            vals.append(np.linalg.norm(np.cross(b, a)))
        return min(vals)


def evaluate(patch, u, v, du=0, dv=0):
    """Module-level alias for BezierPatch.eval / SplinePatch.eval."""
    return patch.eval(u, v, du=du, dv=dv)


@dataclass(frozen=True)
class SplinePatch:
    """Bicubic tensor-product B-spline patch on the canonical double knots.

    The 8x8 coefficient net indexes u along axis 0 and v along axis 1.  The
    equivalent 3x3 grid of Bezier pieces joins parametrically C1 across every
    internal (double-knot) boundary by construction of the representation.
    """

    net: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "net", np.asarray(self.net, dtype=float))
        if self.net.shape != (8, 8, 3):
            raise ValueError("SplinePatch net must have shape (8, 8, 3)")

    @property
    def knots(self):
        return KNOT_VECTOR

    def to_pieces(self):
        """3x3 grid of BezierPatch; pieces[iu][iv] covers segment (iu, iv)."""
        rows = np.empty((10, 8, 3))
        for j in range(8):
            rows[:, j] = pw_to_flat(pw_from_spline(self.net[:, j]))
        full = np.empty((10, 10, 3))
        for i in range(10):
            full[i] = pw_to_flat(pw_from_spline(rows[i]))
        grid = []
        for iu in range(3):
            row = []
            for iv in range(3):
                row.append(BezierPatch(full[3 * iu: 3 * iu + 4, 3 * iv: 3 * iv + 4]))
            grid.append(row)
        return grid

    def eval(self, u, v, du=0, dv=0):
        if not (0 <= du <= 3 and 0 <= dv <= 3 and du + dv <= 6):
            raise ValueError("derivative order out of range")
        iu, iv = _segment_index(float(u)), _segment_index(float(v))
        pieces = self._pieces_cache()
        s = (float(u) - BREAKS[iu]) / SEG_LEN
        t = (float(v) - BREAKS[iv]) / SEG_LEN
        val = pieces[iu][iv].eval(s, t, du, dv)
        return val * 3.0 ** (du + dv)

    def _pieces_cache(self):
        cache = getattr(self, "_pieces", None)
        if cache is None:
            cache = self.to_pieces()
            object.__setattr__(self, "_pieces", cache)
        return cache

    def boundary_row(self, side):
        """Spline coefficients (8,3) of the boundary curve on a side.

        Sides: 'v0' -> P(u,0), 'v1' -> P(u,1), 'u0' -> P(0,v), 'u1' -> P(1,v).
        """
        if side == "v0":
            return self.net[:, 0]
        if side == "v1":
            return self.net[:, -1]
        if side == "u0":
            return self.net[0, :]
        if side == "u1":
            return self.net[-1, :]
        raise ValueError(f"unknown side {side!r}")

    def transversal_row(self, side):
        """Spline coefficients of the inward transversal derivative on a side.

        For 'v0' this is d_v P(u, 0); for 'v1' it is -d_v P(u, 1) (pointing
        into the patch), and analogously for 'u0'/'u1'.
        """
        d = 3.0 / (KNOT_VECTOR[DEGREE + 1] - KNOT_VECTOR[1])  # = 9
        if side == "v0":
            return d * (self.net[:, 1] - self.net[:, 0])
        if side == "v1":
            return d * (self.net[:, -2] - self.net[:, -1])
        if side == "u0":
            return d * (self.net[1, :] - self.net[0, :])
        if side == "u1":
            return d * (self.net[-2, :] - self.net[-1, :])
        raise ValueError(f"unknown side {side!r}")


def spline_to_pieces(net, knots_u=KNOT_VECTOR, knots_v=None):
    """Convert a tensor-product B-spline net to its grid of Bezier pieces.

    Supports the canonical double-knot vector (3x3 grid from an 8x8 net) and
    the clamped no-interior-knot vector (identity on a 4x4 Bezier net).
    """
    if knots_v is None:
        knots_v = knots_u
    kind_u = _canonical_kind(knots_u)
    kind_v = _canonical_kind(knots_v)
    net = np.asarray(net, dtype=float)
    if kind_u == "bezier" and kind_v == "bezier":
        if net.shape != (4, 4, 3):
            raise ValueError("expected a 4x4 net for Bezier knots")
        return [[BezierPatch(net)]]
    if kind_u == "double" and kind_v == "double":
        return SplinePatch(net).to_pieces()
    raise KnotError("mixed knot kinds are not supported")


# ---------------------------------------------------------------------------
# continuity measurement

_SIDES = {
    "u0": (lambda w: (0.0, w), "u", +1.0),
    "u1": (lambda w: (1.0, w), "u", +1.0),
    "v0": (lambda w: (w, 0.0), "v", +1.0),
    "v1": (lambda w: (w, 1.0), "v", +1.0),
}


def _side_derivative(patch, side, w, order):
    """Order-th transversal derivative along a side at edge parameter w."""
    to_uv, axis, _ = _SIDES[side]
    u, v = to_uv(w)
    if order == 0:
        return patch.eval(u, v)
    if axis == "u":
        return patch.eval(u, v, du=order)
    return patch.eval(u, v, dv=order)


def continuity_order(left, right, edge=("u1", "u0"), samples=17, tol=1e-9,
                     reversed_edge=False):
    """Largest k with matching cross-boundary derivatives through order k.

    Parameters
    ----------
    left, right : BezierPatch or SplinePatch
    edge : (left side, right side), sides named 'u0', 'u1', 'v0', 'v1'.
        Both sides must traverse the shared edge in the same direction unless
        `reversed_edge` is set, in which case the right side runs backwards.
    samples : number of edge parameters checked.
    tol : geometric tolerance, relative to the patch pair's coordinate scale.

    Returns
    -------
    (order, residuals) : order in -1..3 and the max residual per order 0..3.
    """
    ls, rs = edge
    ws = np.linspace(0.0, 1.0, samples)
    scale = max(float(np.abs(left.net).max()), float(np.abs(right.net).max()), 1.0)
    residuals = np.zeros(4)
    for order in range(4):
        worst = 0.0
        for w in ws:
            a = _side_derivative(left, ls, w, order)
            b = _side_derivative(right, rs, 1.0 - w if reversed_edge else w, order)
            if reversed_edge and order % 2 == 1 and _SIDES[rs][1] == "w":
                b = -b
            worst = max(worst, float(np.abs(a - b).max()))
        residuals[order] = worst
    if residuals[0] > tol * scale:
        return -1, residuals
    order = 0
    for k in (1, 2, 3):
        if residuals[k] <= tol * scale * 3.0 ** k:
            order = k
        else:
            break
    return order, residuals


# ---------------------------------------------------------------------------
# boundary curves and the middle-derivative factorization

@dataclass(frozen=True)
class BoundaryCurve:
    """Three C1-joined cubic segments over [0,1/3], [1/3,2/3], [2/3,1]."""

    segments: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "segments", np.asarray(self.segments, dtype=float))
        if self.segments.shape != (3, 4, 3):
            raise ValueError("BoundaryCurve needs segments of shape (3, 4, 3)")

    def eval(self, u, der=0):
        return pw_eval(self.segments, u, der)

    def jets_at_knot(self, which, side):
        return pw_jets_at_knot(self.segments, which, side)

    def c1_residual(self):
        return pw_c1_residual(self.segments)

    def c0_residual(self):
        res = 0.0
        for k in (1, 2):
            res = max(res, float(np.abs(self.segments[k - 1][-1] - self.segments[k][0]).max()))
        return res

    def middle_derivative_power(self):
        """Global-parameter power coefficients (3,3) of c' on the middle segment."""
        glob = pw_segment_power_global(self.segments, 1)
        return poly_derive(glob)

    def derivative_scale(self):
        us = np.linspace(0.0, 1.0, 33)
        return max(float(np.linalg.norm(self.eval(u, 1))) for u in us)

    def spline_coefficients(self):
        return spline_from_pw(self.segments)


@dataclass(frozen=True)
class Factorization:
    """c'(u) = ell(u) * gamma(u) with ell linear (vector), gamma linear (scalar)."""

    ell: np.ndarray      # (2, 3) power coefficients, global parameter
    gamma: np.ndarray    # (2,) power coefficients, gamma(anchor) = 1
    root: float | None   # real root of gamma, None when gamma is constant


def factor_quadratic_vector(q, anchor, rel_tol=1e-10):
    """Factor a vector-valued quadratic as linear-vector times linear-scalar.

    Returns a Factorization normalized to gamma(anchor) = 1, or None when no
    real factorization within tolerance exists.
    """
    q = np.asarray(q, dtype=float)
    if q.shape[0] < 3:
        pad = np.zeros((3 - q.shape[0], q.shape[1]))
        q = np.concatenate([q, pad], axis=0)
    scale = float(np.abs(q).max())
    if scale == 0.0:
        return Factorization(np.zeros((2, 3)), np.array([1.0, 0.0]), None)
    if np.linalg.norm(q[2]) <= rel_tol * scale:
        return Factorization(q[:2].copy(), np.array([1.0, 0.0]), None)
    lead = q[2]
    comp = int(np.argmax(np.abs(lead)))
    a, b, c = q[2, comp], q[1, comp], q[0, comp]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    sq = float(np.sqrt(disc))
    roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
    for r in sorted(roots, key=lambda t: abs(t - anchor), reverse=True):
        val = poly_eval(q, np.asarray(r))
        if np.linalg.norm(val) > rel_tol * scale * 10.0:
            continue
        if abs(anchor - r) < 1e-8:
            continue
        # deflate: q = (u - r) * h with h linear
        h1 = q[2]
        h0 = q[1] + r * q[2]
        gamma = np.array([-r, 1.0]) / (anchor - r)
        ell = np.stack([h0, h1]) * (anchor - r)
        recon = np.zeros((3, 3))
        recon[0] = ell[0] * gamma[0]
        recon[1] = ell[0] * gamma[1] + ell[1] * gamma[0]
        recon[2] = ell[1] * gamma[1]
        if np.abs(recon - q).max() <= 1e-8 * scale:
            return Factorization(ell, gamma, float(r))
    return None


def factor_middle_derivative(curve: BoundaryCurve, rel_tol=1e-10):
    """Factor the middle segment's derivative as ell * gamma (Lemma-5 form).

    Returns a Factorization with gamma normalized at u = 1/3, or None when
    the derivative does not factor (the generic case).
    """
    q = curve.middle_derivative_power()
    sup = max(float(np.linalg.norm(poly_eval(q, np.asarray(u))))
              for u in np.linspace(1 / 3, 2 / 3, 17))
    if sup < 1e-13 * max(1.0, float(np.abs(curve.segments).max())):
        raise ValueError("degenerate segment")
    fac = factor_quadratic_vector(q, anchor=1 / 3, rel_tol=rel_tol)
    if fac is not None and fac.root is not None and 1 / 3 - 1e-9 <= fac.root <= 2 / 3 + 1e-9:
        # gamma must be root-free on the segment; a root inside means the
        # derivative vanishes there, which the regularity precondition forbids.
        raise ValueError("degenerate segment")
    return fac


# ---------------------------------------------------------------------------
# JSON interchange

def patch_to_json(patch):
    """Serialize a patch to the interchange format (bit-exact round trip)."""
    if isinstance(patch, SplinePatch):
        knots = KNOT_VECTOR
    elif isinstance(patch, BezierPatch):
        knots = BEZIER_KNOTS
    else:
        raise TypeError("expected SplinePatch or BezierPatch")
    n = patch.net.shape[0]
    doc = {
        "knots_u": [repr(float(k)) for k in knots],
        "knots_v": [repr(float(k)) for k in knots],
        "net": [[repr(float(x)) for x in patch.net[i, j]]
                for i in range(n) for j in range(n)],
    }
    return json.dumps(doc, indent=None, separators=(",", ":"))


def patch_from_json(text):
    doc = json.loads(text)
    knots_u = np.array([float(x) for x in doc["knots_u"]])
    kind = _canonical_kind(knots_u)
    flat = np.array([[float(x) for x in row] for row in doc["net"]])
    n = 8 if kind == "double" else 4
    net = flat.reshape(n, n, 3)
    return SplinePatch(net) if kind == "double" else BezierPatch(net)
