"""Piecewise power-term functions with exact antiderivatives.

Coefficient data (convective flux, diffusion coefficient, initial datum) is
stored as a breakpoint list with one term list per piece.  Each term is
``c * (u - anchor)**e`` with the anchor at the piece's left breakpoint, which
keeps antiderivatives and square roots of linear ramps exact.  Continuity
constants are accumulated once at construction, so evaluation never
integrates at runtime.
"""

from __future__ import annotations

import numpy as np

__all__ = ["PiecewiseFunction", "polynomial", "constant"]


class PiecewiseFunction:
    """Real function defined piecewise by anchored power terms.

    Parameters
    ----------
    breakpoints : sorted interior breakpoints (len = npieces - 1); the first
        piece extends to -inf, the last to +inf.
    pieces : for each piece, a list of ``(coef, exponent)`` terms in the local
        variable ``u - anchor``.  The anchor of piece ``j >= 1`` is
        ``breakpoints[j-1]``; piece 0 is anchored at ``breakpoints[0]`` (or at
        0.0 when there are no breakpoints at all).
    consts : optional per-piece additive constants (used by antiderivative).
    """

    def __init__(self, breakpoints, pieces, consts=None):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        if self.breakpoints.ndim != 1 or np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one piece more than breakpoints")
        self.pieces = [[(float(c), float(e)) for (c, e) in terms] for terms in pieces]
        for terms in self.pieces:
            if any(e < 0 for _, e in terms):
                raise ValueError("negative exponents are not supported")
        self.consts = [0.0] * len(self.pieces) if consts is None else list(consts)

    def _anchor(self, j):
        if self.breakpoints.size == 0:
            return 0.0
        return float(self.breakpoints[min(max(j - 1, 0), len(self.breakpoints) - 1)])

    def _eval_piece(self, j, s):
        acc = np.full_like(s, self.consts[j], dtype=float)
        for c, e in self.pieces[j]:
            if e == int(e):
                acc = acc + c * s ** int(e)
            else:
                # fractional powers only occur right of their anchor (ramps)
                acc = acc + c * np.maximum(s, 0.0) ** e
        return acc

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        idx = np.searchsorted(self.breakpoints, u, side="right")
        out = np.empty_like(u)
        for j in np.unique(idx):
            m = idx == j
            out[m] = self._eval_piece(j, u[m] - self._anchor(j))
        return float(out[0]) if scalar else out

    def derivative(self):
        new = []
        for terms in self.pieces:
            d = [(c * e, e - 1.0) for c, e in terms if e != 0.0]
            new.append(d or [(0.0, 0.0)])
        return PiecewiseFunction(self.breakpoints, new)

    def antiderivative(self, base=0.0):
        """Antiderivative F with ``F(base) = 0``, continuous at breakpoints."""
        terms = [
            [(c / (e + 1.0), e + 1.0) for c, e in piece] + [(const, 1.0)]
            for piece, const in zip(self.pieces, self.consts)
        ]
        out = PiecewiseFunction(self.breakpoints, terms)
        for j in range(1, len(terms)):
            x = float(self.breakpoints[j - 1])
            left = out._eval_piece(j - 1, np.array(x - out._anchor(j - 1)))
            right = out._eval_piece(j, np.array(x - out._anchor(j)))
            out.consts[j] = float(left - right)
        shift = out(base)
        out.consts = [c - shift for c in out.consts]
        return out

    def sqrt(self):
        """Pointwise square root.

        Pieces must be a nonnegative constant or a pure ramp ``c*(u-anchor)``;
        an affine piece with nonzero anchor value must be split at its root
        first.
        """
        new = []
        for terms, const in zip(self.pieces, self.consts):
            t = [(c, e) for c, e in terms if c != 0.0]
            if const != 0.0:
                t = t + [(const, 0.0)]
            if not t:
                new.append([(0.0, 0.0)])
            elif len(t) == 1 and t[0][1] in (0.0, 1.0):
                c, e = t[0]
                if c < 0:
                    raise ValueError("sqrt of a negative piece")
                new.append([(float(np.sqrt(c)), e / 2.0)])
            else:
                raise ValueError(
                    "sqrt supports constant pieces and ramps anchored at their "
                    "root; split affine pieces at the root first"
                )
        return PiecewiseFunction(self.breakpoints, new)

    def scaled(self, factor):
        return PiecewiseFunction(
            self.breakpoints,
            [[(factor * c, e) for c, e in t] for t in self.pieces],
            [factor * c for c in self.consts],
        )

    def critical_points(self, lo, hi):
        """Roots of the derivative inside (lo, hi), for monotone-flux setup."""
        pts = set()
        d = self.derivative()
        edges = np.concatenate([[lo], self.breakpoints, [hi]])
        for j, terms in enumerate(d.pieces):
            a, b = max(float(edges[j]), lo), min(float(edges[j + 1]), hi)
            if b <= a:
                continue
            if any(e != int(e) for _, e in terms):
                pts.add(self._anchor(j))
                continue
            deg = int(max(e for _, e in terms)) if terms else 0
            coeffs = np.zeros(deg + 1)
            for c, e in terms:
                coeffs[int(e)] += c
            if deg >= 1 and np.any(coeffs[1:] != 0.0):
                anchor = self._anchor(j)
                for r in np.roots(coeffs[::-1]):
                    if abs(r.imag) < 1e-12 and a < r.real + anchor < b:
                        pts.add(float(r.real + anchor))
        return sorted(p for p in pts if lo < p < hi)


def polynomial(coeffs):
    """Single-piece polynomial from power-basis coefficients (low to high)."""
    return PiecewiseFunction([], [[(float(c), float(e)) for e, c in enumerate(coeffs)]])


def constant(value):
    return polynomial([value])
