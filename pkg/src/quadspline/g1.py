"""Residual calculus for unbiased G1 joins of bicubic spline patches.

The unbiased G1 constraint along a shared boundary c(u) with transversal
derivative fields rL, rR pointing into the two patches is

    rL(u) + rR(u) = alpha(u) * c'(u),

with alpha a scalar transition function, piecewise over the three knot
intervals of an edge.  alpha == 0 is parametric C1.  This module provides
the residual functionals for that constraint and for everything derived
from it: the vertex tangent relation, the vertex-enclosure alternating sum,
the X-configuration slope relation, the edge-knot relations coupling alpha
and the boundary curve at the interior knots, straight-segment forcing at
higher-order saddles, and the admissible degree bookkeeping for alpha.

Sector conventions follow the vertex picture: at a vertex the outgoing edge
tangents t^0..t^{n-1} are ordered counterclockwise, sector k is the patch
between edges k and k+1, and the unbiased vertex value is
alpha(0) = 2 cos(2 pi / n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bezier import (BREAKS, SEG_LEN, BoundaryCurve, bezier_to_power,
                     factor_quadratic_vector, poly_compose_affine,
                     poly_derive, poly_eval)

ADMISSIBLE_PAIRS = ((2, 1), (2, 0), (1, 1), (1, 0), (0, 1), (0, 0))
FORCING_PAIRS = frozenset({(2, 1), (2, 0), (1, 1), (0, 1)})


def unbiased_alpha_value(valence):
    """The local, unbiased vertex value 2 cos(2 pi / n)."""
    return 2.0 * np.cos(2.0 * np.pi / valence)


# ---------------------------------------------------------------------------
# transition functions

@dataclass(frozen=True)
class TransitionFunction:
    """Piecewise scalar transition along one edge, in the global parameter.

    piece0 and piece2 are linear polynomials on [0,1/3] and [2/3,1]; the
    middle piece is the rational beta/gamma on [1/3,2/3] with deg beta <= 2,
    deg gamma <= 1, gamma(1/3) = 1 and gamma root-free on the segment.
    Coefficients are power-basis in the global edge parameter.
    """

    piece0: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    piece2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "piece0", np.asarray(self.piece0, dtype=float))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "piece2", np.asarray(self.piece2, dtype=float))

    @classmethod
    def zero(cls):
        z = np.zeros(2)
        return cls(z, np.zeros(3), np.array([1.0, 0.0]), z)

    @classmethod
    def polynomial_pieces(cls, p0, mid, p2):
        """Build from three polynomial pieces (gamma == 1)."""
        p0 = np.pad(np.asarray(p0, dtype=float), (0, max(0, 2 - len(p0))))[:2]
        mid = np.pad(np.asarray(mid, dtype=float), (0, max(0, 3 - len(mid))))[:3]
        p2 = np.pad(np.asarray(p2, dtype=float), (0, max(0, 2 - len(p2))))[:2]
        return cls(p0, mid, np.array([1.0, 0.0]), p2)

    def piece_index(self, u):
        if u < BREAKS[1]:
            return 0
        if u < BREAKS[2]:
            return 1
        return 2

    def eval(self, u):
        u = float(u)
        i = self.piece_index(u)
        if i == 0:
            return float(poly_eval(self.piece0, np.asarray(u)))
        if i == 2:
            return float(poly_eval(self.piece2, np.asarray(u)))
        g = float(poly_eval(self.gamma, np.asarray(u)))
        return float(poly_eval(self.beta, np.asarray(u))) / g

    def derivative(self, u, side="+"):
        u = float(u)
        i = self.piece_index(u - 1e-13) if side == "-" else self.piece_index(u)
        if i == 0:
            return float(poly_eval(poly_derive(self.piece0), np.asarray(u)))
        if i == 2:
            return float(poly_eval(poly_derive(self.piece2), np.asarray(u)))
        b, g = self.beta, self.gamma
        bu = float(poly_eval(b, np.asarray(u)))
        gu = float(poly_eval(g, np.asarray(u)))
        dbu = float(poly_eval(poly_derive(b), np.asarray(u)))
        dgu = float(poly_eval(poly_derive(g), np.asarray(u)))
        return (dbu * gu - bu * dgu) / (gu * gu)

    def degree_pair(self, tol=1e-12):
        scale = max(float(np.abs(self.beta).max()), float(np.abs(self.gamma).max()), 1e-300)
        db = 0
        for k in (2, 1):
            if abs(self.beta[k]) > tol * scale:
                db = k
                break
        dg = 1 if abs(self.gamma[1]) > tol * scale else 0
        return db, dg

    def value_continuity_residual(self):
        r = 0.0
        for u, left, right in ((BREAKS[1], self.piece0, None), (BREAKS[2], None, self.piece2)):
            g = float(poly_eval(self.gamma, np.asarray(u)))
            mid = float(poly_eval(self.beta, np.asarray(u))) / g
            other = left if left is not None else right
            r = max(r, abs(float(poly_eval(other, np.asarray(u))) - mid))
        return r

    def validate(self, tol=1e-10):
        if self.degree_pair() not in ADMISSIBLE_PAIRS:
            raise ValueError("inadmissible (deg beta, deg gamma) pair")
        anchor = float(poly_eval(self.gamma, np.asarray(BREAKS[1])))
        if abs(anchor - 1.0) > tol:
            raise ValueError("gamma not normalized to gamma(1/3) = 1")
        gs = poly_eval(self.gamma, np.linspace(BREAKS[1], BREAKS[2], 33))
        if np.any(np.abs(gs) < 1e-9):
            raise ValueError("gamma has a root on the middle segment")
        if self.value_continuity_residual() > tol * max(1.0, abs(self.eval(0.0)), abs(self.eval(1.0))):
            raise ValueError("transition not value-continuous at the knots")
        return True

    def to_dict(self):
        return {
            "piece0": [float(x) for x in self.piece0],
            "beta": [float(x) for x in self.beta],
            "gamma": [float(x) for x in self.gamma],
            "piece2": [float(x) for x in self.piece2],
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(np.array(doc["piece0"]), np.array(doc["beta"]),
                   np.array(doc["gamma"]), np.array(doc["piece2"]))


# ---------------------------------------------------------------------------
# vertex frames

@dataclass(frozen=True)
class VertexFrame:
    """Second-order vertex expansion: tangents, curvature data, normal.

    tangents[k] is the boundary-curve derivative leaving the vertex into
    sector direction k; d2[k] the second derivative along it; mixed[k] the
    mixed derivative of sector-k's patch at the vertex.  The tangent layout
    satisfies t[k+1] + t[k-1] = 2 cos(2 pi / n) t[k] exactly.
    """

    position: np.ndarray
    valence: int
    tangents: np.ndarray
    d2: np.ndarray
    mixed: np.ndarray
    normal: np.ndarray
    alpha_slope: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "tangents", np.asarray(self.tangents, dtype=float))
        object.__setattr__(self, "d2", np.asarray(self.d2, dtype=float))
        object.__setattr__(self, "mixed", np.asarray(self.mixed, dtype=float))
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))

    @property
    def alpha0(self):
        return unbiased_alpha_value(self.valence)

    def tangent_relation_residual(self):
        n = self.valence
        worst = 0.0
        for k in range(n):
            r = self.tangents[(k + 1) % n] + self.tangents[(k - 1) % n] \
                - self.alpha0 * self.tangents[k]
            worst = max(worst, float(np.abs(r).max()))
        return worst

    def mixed_relation_residual(self):
        """Residual of m[k] + m[k-1] = alpha0 d2[k] + slope t[k] per sector."""
        n = self.valence
        worst = 0.0
        for k in range(n):
            r = self.mixed[k] + self.mixed[(k - 1) % n] \
                - self.alpha0 * self.d2[k] - self.alpha_slope * self.tangents[k]
            worst = max(worst, float(np.abs(r).max()))
        return worst

    def scale(self):
        return max(float(np.linalg.norm(t)) for t in self.tangents)

    def is_symmetric_saddle(self, tol=1e-8):
        """Higher-order saddle with rotationally symmetric sector layout."""
        s = max(self.scale(), 1e-300)
        curv = max(abs(float(self.normal @ d)) for d in self.d2)
        if curv > tol * s * s:
            return False
        norms = np.array([np.linalg.norm(t) for t in self.tangents])
        return float(norms.max() - norms.min()) <= tol * s


def vertex_enclosure_residual(frame: VertexFrame):
    """Alternating-sum enclosure residual at an even-valence vertex.

    Returns |sum_k (-1)^k alpha0 * (normal . d2[k])|, or None for odd
    valence, where the constraint is not derived.
    """
    n = frame.valence
    if n % 2 == 1:
        return None
    a0 = frame.alpha0
    total = 0.0
    for k in range(n):
        total += (-1) ** k * a0 * float(frame.normal @ frame.d2[k])
    return abs(total)


def x_tangent_slope_relation(frame: VertexFrame, slopes, tol=1e-10):
    """Lemma-style slope residuals at an X-configured 4-valent vertex.

    slopes are the edge transition derivatives at the vertex, sector order.
    Returns (|s0 - s2|, |s1 - s3|) or None when the tangents do not form an X.
    """
    if frame.valence != 4:
        return None
    s = max(frame.scale(), 1e-300)
    if np.abs(frame.tangents[0] + frame.tangents[2]).max() > tol * s:
        return None
    if np.abs(frame.tangents[1] + frame.tangents[3]).max() > tol * s:
        return None
    s0, s1, s2, s3 = (float(x) for x in slopes)
    return abs(s0 - s2), abs(s1 - s3)


# ---------------------------------------------------------------------------
# the G1 residual itself

@dataclass(frozen=True)
class EdgeField:
    """Boundary trace of one patch: curve derivative and transversal field."""

    along: object        # callable u -> (3,)
    transversal: object  # callable u -> (3,)

    @classmethod
    def from_pw(cls, curve_segments, ribbon_segments):
        from .bezier import pw_eval

        curve_segments = np.asarray(curve_segments, dtype=float)
        ribbon_segments = np.asarray(ribbon_segments, dtype=float)
        return cls(along=lambda u: pw_eval(curve_segments, u, 1),
                   transversal=lambda u: pw_eval(ribbon_segments, u, 0))


def _alpha_eval(alpha, u):
    if alpha is None:
        return 0.0
    if isinstance(alpha, TransitionFunction):
        return alpha.eval(u)
    return float(alpha(u))


def g1_residual(left: EdgeField, right: EdgeField, alpha, samples=33):
    """Sup-norm residual of rL + rR - alpha * c' along the edge.

    Samples each of the three knot intervals `samples` times; the residual is
    normalized by the largest boundary derivative.  Returns (max_residual,
    table) with one (u, residual) row per sample.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples per segment")
    us = []
    for i in range(3):
        seg = np.linspace(BREAKS[i], BREAKS[i + 1], samples)
        if i > 0:
            seg = seg[1:]
        us.extend(seg)
    sup_c = max(float(np.linalg.norm(left.along(u))) for u in us)
    sup_c = max(sup_c, 1e-300)
    table = []
    worst = 0.0
    for u in us:
        r = left.transversal(u) + right.transversal(u) \
            - _alpha_eval(alpha, u) * left.along(u)
        val = float(np.linalg.norm(r)) / sup_c
        table.append((float(u), val))
        worst = max(worst, val)
    return worst, table


# ---------------------------------------------------------------------------
# edge-knot relations (sector form)

def edge_knot_relations(alpha_right, alpha_left, jets, smoothness):
    """Residuals of the edge-knot relations at one interior boundary knot.

    Inputs are in sector form: `alpha_right` / `alpha_left` are the value and
    derivatives (a0, a1, a2) of the transition pieces on the two sides, each
    in its own sector parameter (the left sector runs backwards along the
    boundary, so a global transition alpha(u) maps to
    right = (alpha(t), alpha'(t+), alpha''(t+)) and
    left = (-alpha(t), alpha'(t-), -alpha''(t-))).
    `jets` maps 't' to the common tangent and 'd2_plus', 'd2_minus',
    'd3_plus', 'd3_minus' to the one-sided sector derivatives of the curve.

    For smoothness 1 only the C1-spline relations apply; smoothness 2 adds
    the C2-spline pair.
    """
    if smoothness not in (1, 2):
        raise ValueError("spline smoothness must be 1 or 2")
    a0r, a1r, a2r = (float(x) for x in alpha_right)
    a0l, a1l, a2l = (float(x) for x in alpha_left)
    t = np.asarray(jets["t"], dtype=float)
    d2p = np.asarray(jets["d2_plus"], dtype=float)
    d2m = np.asarray(jets["d2_minus"], dtype=float)
    out = {
        "value": abs(a0r + a0l),
        "lemma2": float(np.linalg.norm(a0r * (d2p - d2m) + (a1r - a1l) * t)),
    }
    if smoothness == 2:
        d3p = np.asarray(jets["d3_plus"], dtype=float)
        d3m = np.asarray(jets["d3_minus"], dtype=float)
        out["slope"] = abs(a1r - a1l)
        out["lemma3"] = float(np.linalg.norm(
            a0r * (d3p - d3m) + 4.0 * a1r * d2p + (a2r - a2l) * t))
    return out


def sector_data_at_knot(curve: BoundaryCurve, alpha, which):
    """Map a global curve/transition pair to sector form at knot 1 or 2.

    The right sector keeps the global parameter; the left sector reverses it,
    flipping the sign of odd derivatives of the curve and of even derivatives
    of the transition.
    """
    tau = BREAKS[which]
    jm = curve.jets_at_knot(which, "-")
    jp = curve.jets_at_knot(which, "+")
    jets = {
        "t": jp[1],
        "d2_plus": jp[2],
        "d2_minus": jm[2],
        "d3_plus": jp[3],
        "d3_minus": -jm[3],
    }
    if isinstance(alpha, TransitionFunction):
        pieces = [alpha.piece0, None, alpha.piece2]
        if alpha.degree_pair()[1] != 0:
            raise ValueError("sector mapping implemented for polynomial pieces")
        mid = alpha.beta / alpha.gamma[0]
        pieces[1] = mid

        def one_sided(side):
            i = which - 1 if side == "-" else which
            p = pieces[i]
            return [float(poly_eval(p, np.asarray(tau))),
                    float(poly_eval(poly_derive(p), np.asarray(tau))),
                    float(poly_eval(poly_derive(poly_derive(p)), np.asarray(tau)))]

        vm = one_sided("-")
        vp = one_sided("+")
    else:
        raise TypeError("alpha must be a TransitionFunction")
    alpha_right = (vp[0], vp[1], vp[2])
    alpha_left = (-vm[0], vm[1], -vm[2])
    return alpha_right, alpha_left, jets


# ---------------------------------------------------------------------------
# straight-segment forcing (saddle shape defect) and admissibility

GENERIC = "Generic"
PLANAR_FORCED = "PlanarForced"
STRAIGHT_FORCED = "StraightForced"


def detect_forced_straight(segment, frame: VertexFrame | None = None, tol=1e-8):
    """Classify a boundary segment emanating from a mesh vertex.

    `segment` is a (4,3) cubic Bezier whose parameter-0 end sits at the
    vertex carrying `frame` (pass None when the segment does not touch a
    vertex).  StraightForced requires the Lemma hypothesis: a factorable
    derivative c' = ell * gamma together with a symmetric higher-order saddle
    at the endpoint; a factorable derivative with vanishing normal curvature
    along the segment gives PlanarForced.
    """
    segment = np.asarray(segment, dtype=float)
    dpow = poly_derive(bezier_to_power(segment))
    scale = max(float(np.abs(dpow).max()), 1e-300)
    fac = factor_quadratic_vector(dpow, anchor=0.0, rel_tol=1e-10)
    if fac is None:
        return GENERIC
    if frame is None:
        return GENERIC
    if frame.is_symmetric_saddle(tol):
        return STRAIGHT_FORCED
    c2 = 2.0 * dpow[1] if dpow.shape[0] > 1 else np.zeros(3)
    if abs(float(frame.normal @ c2)) <= tol * scale:
        return PLANAR_FORCED
    return GENERIC


@dataclass(frozen=True)
class Admissibility:
    pairs: tuple
    straight: bool
    forcing: tuple

    def __contains__(self, pair):
        return tuple(pair) in self.pairs


def alpha_admissibility(segment, rel_tol=1e-10):
    """Admissible (deg beta, deg gamma) transition pairs for one segment.

    Works in the segment's local parameter.  A straight segment admits all
    six pairs (the excluded shape-defect case); a non-factorable generic
    derivative only the linear/constant transitions; a factorable derivative
    additionally the rational pairs, which force the Corollary-2 curve form.
    """
    segment = np.asarray(segment, dtype=float)
    dpow = poly_derive(bezier_to_power(segment))
    if dpow.shape[0] < 3:
        dpow = np.vstack([dpow, np.zeros((3 - dpow.shape[0], 3))])
    scale = max(float(np.abs(dpow).max()), 1e-300)
    sup = max(float(np.linalg.norm(poly_eval(dpow, np.asarray(s))))
              for s in np.linspace(0, 1, 9))
    if sup < 1e-13:
        raise ValueError("degenerate segment")
    # straight: all derivative coefficients parallel
    stacked = dpow[np.linalg.norm(dpow, axis=1) > rel_tol * scale]
    straight = np.linalg.matrix_rank(stacked, tol=1e-9 * scale) <= 1
    if straight:
        pairs = tuple(ADMISSIBLE_PAIRS)
        return Admissibility(pairs, True, tuple(sorted(FORCING_PAIRS)))
    pairs = {(1, 0), (0, 0)}
    quad_vanishes = np.linalg.norm(dpow[2]) <= rel_tol * scale
    if quad_vanishes:
        pairs.add((2, 0))
    fac = factor_quadratic_vector(dpow, anchor=0.0, rel_tol=rel_tol)
    if fac is not None and fac.root is not None:
        pairs.update({(2, 1), (1, 1), (0, 1)})
    pairs = tuple(sorted(pairs, reverse=True))
    forcing = tuple(sorted(p for p in pairs if p in FORCING_PAIRS))
    return Admissibility(pairs, False, forcing)
