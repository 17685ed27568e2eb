"""Full-rank lattices, hypercube windows, dyadic refinement and the
lexicographic order on integer coordinates."""

from __future__ import annotations

import itertools

import numpy as np

from homfields.core import UsageError

DET_TOL = 1e-12


class Lattice:
    """The lattice ``{A k : k in Z^l}`` for a nonsingular base matrix ``A``."""

    def __init__(self, base_matrix, delta: float | None = None):
        A = np.atleast_2d(np.asarray(base_matrix, dtype=float)).copy()
        if A.shape[0] != A.shape[1]:
            raise UsageError(f"base matrix must be square, got shape {A.shape}")
        det = abs(float(np.linalg.det(A)))
        if det <= DET_TOL:
            raise UsageError(f"singular base matrix (|det| = {det:.3g})")
        # an exactly known volume (e.g. after dyadic refinement) replaces the
        # rounded determinant
        if delta is None or not np.isclose(delta, det, rtol=1e-9, atol=0):
            delta = det
        A.setflags(write=False)
        self._A = A
        self._delta = delta

    @property
    def base_matrix(self) -> np.ndarray:
        return self._A

    @property
    def l(self) -> int:
        return self._A.shape[0]

    @property
    def delta(self) -> float:
        return self._delta

    def embed(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self._A.T

    def __eq__(self, other):
        return isinstance(other, Lattice) and np.array_equal(self._A, other._A)

    def __hash__(self):
        return hash(self._A.tobytes())

    def __repr__(self):
        return f"Lattice({self._A.tolist()})"


def make_lattice(A) -> Lattice:
    return Lattice(A)


def integer_lattice(l: int = 1) -> Lattice:
    return Lattice(np.eye(l))


def refine(L: Lattice, n: int) -> Lattice:
    """The lattice ``2^-n L``."""
    if n < 0:
        raise UsageError("refinement level must be nonnegative")
    if n == 0:
        return L
    return Lattice(L.base_matrix * 2.0**-n, L.delta * 2.0 ** (-n * L.l))


def fmt_point(k) -> str:
    """``1`` for one-dimensional points, ``(1,0)`` otherwise."""
    k = np.asarray(k, dtype=np.int64).ravel().tolist()
    return str(k[0]) if len(k) == 1 else "(" + ",".join(map(str, k)) + ")"


def lex_compare(s, t) -> int:
    """-1, 0 or 1 according to the lexicographic order on integer vectors."""
    s = np.asarray(s, dtype=np.int64).ravel()
    t = np.asarray(t, dtype=np.int64).ravel()
    if s.shape != t.shape:
        raise UsageError("points must have equal length")
    diff = np.nonzero(s != t)[0]
    if len(diff) == 0:
        return 0
    i = diff[0]
    return -1 if s[i] < t[i] else 1


def lex_sort(coords: np.ndarray) -> np.ndarray:
    """Indices sorting integer coordinate rows in lexicographic order."""
    coords = np.asarray(coords)
    if len(coords) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.lexsort(coords.T[::-1])


class Window:
    """Finite set of lattice points, kept in lexicographic order of their
    integer coordinates."""

    def __init__(self, lattice: Lattice, coords, radius: float | None = None):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, lattice.l)
        order = lex_sort(coords)
        coords = coords[order]
        if len(coords) > 1 and np.any(np.all(coords[1:] == coords[:-1], axis=1)):
            raise UsageError("window points must be distinct")
        coords.setflags(write=False)
        self.lattice = lattice
        self.coords = coords
        self.points = lattice.embed(coords)
        self.points.setflags(write=False)
        self.radius = radius
        self._index = {tuple(c): i for i, c in enumerate(coords.tolist())}

    def __len__(self):
        return len(self.coords)

    def __contains__(self, k):
        return tuple(np.asarray(k, dtype=np.int64).ravel().tolist()) in self._index

    @property
    def l(self) -> int:
        return self.lattice.l

    @property
    def origin_index(self) -> int | None:
        return self._index.get((0,) * self.l)

    def index(self, k) -> int:
        key = tuple(np.asarray(k, dtype=np.int64).ravel().tolist())
        try:
            return self._index[key]
        except KeyError:
            raise UsageError(f"point {list(key)} is outside the window") from None

    def indices_of(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.l)
        return np.array([self.index(p) for p in pts], dtype=np.int64)

    def contains_all(self, points) -> bool:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.l)
        return all(tuple(p) in self._index for p in pts.tolist())

    def subwindow_indices(self, radius: float) -> np.ndarray:
        """Indices of the points inside the centered cube of the given radius."""
        tol = DET_TOL * max(1.0, radius)
        inside = np.all(np.abs(self.points) <= radius + tol, axis=1)
        return np.nonzero(inside)[0]

    def __repr__(self):
        return f"Window({len(self)} points, lattice={self.lattice!r})"


def _k_bounds(L: Lattice, lo: np.ndarray, hi: np.ndarray):
    # integer box containing A^{-1} of the box [lo, hi]
    Ainv = np.linalg.inv(L.base_matrix)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    img = corners @ Ainv.T
    return np.floor(img.min(axis=0) - 1e-9).astype(int), np.ceil(img.max(axis=0) + 1e-9).astype(int)


def _box_points(L: Lattice, lo, hi, closed_hi=True) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    kmin, kmax = _k_bounds(L, lo, hi)
    grids = [np.arange(a, b + 1) for a, b in zip(kmin, kmax)]
    ks = np.array(np.meshgrid(*grids, indexing="ij")).reshape(L.l, -1).T
    pts = L.embed(ks)
    tol = DET_TOL * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))
    keep = np.all(pts >= lo - tol, axis=1)
    if closed_hi:
        keep &= np.all(pts <= hi + tol, axis=1)
    else:
        keep &= np.all(pts < hi - tol, axis=1)
    return ks[keep]


def enumerate_window(L: Lattice, a: float) -> Window:
    """All lattice points ``A k`` inside the cube ``[-a, a]^l``."""
    if not a > 0:
        raise UsageError("window radius must be positive")
    ks = _box_points(L, [-a] * L.l, [a] * L.l)
    return Window(L, ks, radius=float(a))


def block_window(L: Lattice, n: float) -> Window:
    """Lattice points in the half-open block ``[0, n)^l``."""
    if not n > 0:
        raise UsageError("block size must be positive")
    ks = _box_points(L, [0.0] * L.l, [float(n)] * L.l, closed_hi=False)
    return Window(L, ks)


def window_from_coords(L: Lattice, coords) -> Window:
    return Window(L, coords)


def translate_window(w: Window, j) -> Window:
    j = np.asarray(j, dtype=np.int64).reshape(1, -1)
    return Window(w.lattice, w.coords + j, radius=None)


def difference_window(L: Lattice, A_coords, B_coords) -> Window:
    """Window holding every ``a - b`` for integer coordinates ``a`` in A and ``b`` in B."""
    A_coords = np.asarray(A_coords, dtype=np.int64).reshape(-1, L.l)
    B_coords = np.asarray(B_coords, dtype=np.int64).reshape(-1, L.l)
    diff = (A_coords[:, None, :] - B_coords[None, :, :]).reshape(-1, L.l)
    diff = np.unique(diff, axis=0)
    return Window(L, diff)
