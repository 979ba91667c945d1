"""Unit-sphere primitives: validation, tangent-normal decomposition, frames."""

from dataclasses import dataclass

import numpy as np

from . import _config


class UnitVector:
    """A point on the unit sphere S^{p-1}, stored as a read-only array.

    The constructor normalizes its input; inputs of (near) zero norm are
    rejected.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords):
        x = np.array(coords, dtype=float).reshape(-1)
        if x.size < 2:
            raise ValueError("unit vectors need dimension p >= 2, got %d" % x.size)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite coordinates")
        nrm = np.linalg.norm(x)
        if nrm < _config.ZERO_NORM_TOL:
            raise ValueError("cannot normalize a near-zero vector")
        x = x / nrm
        x.flags.writeable = False
        self._coords = x

    @property
    def coords(self):
        return self._coords

    @property
    def p(self):
        return self._coords.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._coords
        return self._coords.astype(dtype)

    def __len__(self):
        return self.p

    def __iter__(self):
        return iter(self._coords)

    def __eq__(self, other):
        if not isinstance(other, UnitVector):
            return NotImplemented
        return np.array_equal(self._coords, other._coords)

    def __hash__(self):
        return hash(self._coords.tobytes())

    def __repr__(self):
        return "UnitVector(%s)" % np.array2string(self._coords, precision=6, separator=", ")

    def dot(self, other):
        return float(self._coords @ np.asarray(other, dtype=float))

    def tolist(self):
        return self._coords.tolist()


def as_unit(x):
    """Coerce ``x`` to a UnitVector (no-op for UnitVector inputs)."""
    return x if isinstance(x, UnitVector) else UnitVector(x)


def basis_vector(p, i=0):
    e = np.zeros(p)
    e[i] = 1.0
    return UnitVector(e)


@dataclass(frozen=True)
class TangentDecomposition:
    """``x = u * pole + v * s`` with ``v = sqrt(1 - u^2)`` and ``s`` orthogonal to the pole.

    ``degenerate`` is set when ``x = +/- pole``; ``s`` is then the first
    vector of :func:`orthonormal_complement_frame`.
    """
    u: float
    v: float
    s: UnitVector
    degenerate: bool = False


def _householder(pole):
    # reflection whose first column is +/- pole; the sign choice keeps ||w|| >= 1
    p = pole.size
    w = pole.copy()
    sign = 1.0 if pole[0] >= 0 else -1.0
    w[0] += sign
    h = np.eye(p) - 2.0 * np.outer(w, w) / (w @ w)
    return h


def orthonormal_complement_frame(pole):
    """Orthonormal basis of the complement of ``pole``, shape ``(p-1, p)``.

    Rows 2..p of a Householder reflection sending e1 to +/- pole; the
    construction is deterministic, and ``pole = e1`` gives ``e2, ..., ep``.
    """
    pole = as_unit(pole).coords
    return _householder(pole)[1:].copy()


def decompose(x, pole):
    x = as_unit(x)
    pole = as_unit(pole)
    if x.p != pole.p:
        raise ValueError("dimension mismatch: %d vs %d" % (x.p, pole.p))
    xc, th = x.coords, pole.coords
    u = float(np.clip(xc @ th, -1.0, 1.0))
    resid = xc - u * th
    v = float(np.linalg.norm(resid))
    if v <= _config.ORTHO_TOL:
        s = UnitVector(orthonormal_complement_frame(th)[0])
        return TangentDecomposition(u=float(np.sign(u)), v=0.0, s=s, degenerate=True)
    # v from the residual norm rather than sqrt(1 - u^2): no cancellation near the pole
    return TangentDecomposition(u=u, v=v, s=UnitVector(resid / np.linalg.norm(resid)))


def compose(u, s, pole):
    u = float(u)
    if not -1.0 <= u <= 1.0:
        raise ValueError("u must lie in [-1, 1], got %r" % u)
    s = as_unit(s)
    pole = as_unit(pole)
    if s.p != pole.p:
        raise ValueError("dimension mismatch: %d vs %d" % (s.p, pole.p))
    if abs(s.coords @ pole.coords) > _config.ORTHO_TOL:
        raise ValueError("s is not orthogonal to the pole")
    v = np.sqrt(max(0.0, 1.0 - u * u))
    return UnitVector(u * pole.coords + v * s.coords)


class TangentProjector:
    """Lazy ``I - pole pole'``."""

    def __init__(self, pole):
        self.pole = as_unit(pole)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        th = self.pole.coords
        return x - np.multiply.outer(x @ th, th)

    def matrix(self):
        th = self.pole.coords
        return np.eye(th.size) - np.outer(th, th)


def one_minus_dot(x, pole):
    """``1 - x . pole`` for unit rows ``x``, via the chord identity ``|x - pole|^2 / 2``.

    Accurate to full relative precision near the pole, where the direct
    difference cancels.
    """
    x = np.asarray(x, dtype=float)
    d = x - np.asarray(pole, dtype=float)
    return 0.5 * np.einsum("...i,...i->...", d, d)


def chord_length(a, b):
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def angle_between(a, b):
    """Angle in radians between unit vectors, stable for tiny angles."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(2.0 * np.arcsin(min(1.0, np.linalg.norm(a - b) / 2.0)))
