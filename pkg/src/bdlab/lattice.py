"""Sites, boxes, height fields and the hyperoctahedral symmetry group.

Sites are plain tuples of ints.  Boxes are ``[-N, N]^d``; box sites are
always enumerated in lexicographic order, which is also the row-major
order of the ``(2N+1,)*d`` height array, and that flat index is what the
dynamics and the schedules use to name a site.

Height fields keep a one-site frame around the box (the *halo*) so the
update kernels never branch on the boundary.  The halo is never updated:
it is all zeros under the pinned-zero convention, and holds the frozen
initial values under the frozen-initial convention.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

Site = tuple[int, ...]


class Boundary(str, Enum):
    PINNED_ZERO = "pinned-zero"
    FROZEN_INITIAL = "frozen-initial"


def l1(x: Sequence[int]) -> int:
    return sum(abs(c) for c in x)


def linf(x: Sequence[int]) -> int:
    return max((abs(c) for c in x), default=0)


def unit(d: int, i: int, sign: int = 1) -> Site:
    """The site ``sign * e_{i+1}`` (axes are 0-based)."""
    return tuple(sign if j == i else 0 for j in range(d))


def neighbors(x: Sequence[int]) -> list[Site]:
    """The 2d lattice neighbours of ``x`` in the order +e1, -e1, +e2, -e2, ..."""
    x = tuple(x)
    out = []
    for i in range(len(x)):
        for s in (1, -1):
            out.append(x[:i] + (x[i] + s,) + x[i + 1:])
    return out


@dataclass(frozen=True)
class BoxSpec:
    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.N < 0:
            raise ValueError(f"half-width must be >= 0, got {self.N}")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def size(self) -> int:
        return self.side ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.d

    @property
    def padded_shape(self) -> tuple[int, ...]:
        return (self.side + 2,) * self.d

    @property
    def origin(self) -> Site:
        return (0,) * self.d

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.d and all(-self.N <= c <= self.N for c in x)

    def index(self, x: Sequence[int]) -> int:
        """Flat (lexicographic) index of a box site."""
        if not self.contains(x):
            raise ValueError(f"site {tuple(x)} is outside {self}")
        return int(np.ravel_multi_index(tuple(c + self.N for c in x), self.shape))

    def site(self, index: int) -> Site:
        return tuple(int(c) - self.N for c in np.unravel_index(index, self.shape))

    def coords(self) -> np.ndarray:
        """All box sites as an ``(size, d)`` integer array, canonical order."""
        grids = np.indices(self.shape).reshape(self.d, -1).T
        return grids - self.N

    # -- padded-grid plumbing used by the compiled kernels --------------------

    def pad_strides(self) -> np.ndarray:
        side = self.side + 2
        return np.array([side ** (self.d - 1 - i) for i in range(self.d)], dtype=np.int64)

    def pad_index(self) -> np.ndarray:
        """Map from box flat index to flat index in the padded grid (read-only)."""
        return _pad_tables(self)[0]

    def pad_offsets(self) -> np.ndarray:
        """Neighbour displacements in the padded grid, order +e1, -e1, +e2, ..."""
        return _pad_tables(self)[1]

    def pad_site(self, pad_flat: int) -> Site:
        c = np.unravel_index(pad_flat, self.padded_shape)
        return tuple(int(v) - self.N - 1 for v in c)


@functools.lru_cache(maxsize=64)
def _pad_tables(box: BoxSpec) -> tuple[np.ndarray, np.ndarray]:
    strides = box.pad_strides()
    index = (box.coords() + box.N + 1) @ strides
    offsets = np.array([s * sgn for s in strides for sgn in (1, -1)], dtype=np.int64)
    index.flags.writeable = False
    offsets.flags.writeable = False
    return index, offsets


def box_sites(box: BoxSpec) -> list[Site]:
    """Box sites in canonical lexicographic order."""
    return [tuple(int(c) for c in row) for row in box.coords()]


def _interior(box: BoxSpec) -> tuple[slice, ...]:
    return (slice(1, box.side + 1),) * box.d


@dataclass(frozen=True, eq=False)
class HeightField:
    """Integer heights on a box plus the frozen halo around it.

    Construct through :meth:`zeros` or :meth:`from_array`; ``padded`` is
    treated as read-only once the field exists.
    """

    box: BoxSpec
    padded: np.ndarray
    boundary: Boundary = Boundary.PINNED_ZERO

    def __post_init__(self):
        if self.padded.shape != self.box.padded_shape:
            raise ValueError(f"padded array has shape {self.padded.shape}, "
                             f"expected {self.box.padded_shape}")
        if self.padded.dtype != np.int64:
            raise TypeError("heights must be int64")

    @classmethod
    def zeros(cls, box: BoxSpec, boundary: Boundary | str = Boundary.PINNED_ZERO) -> "HeightField":
        return cls(box, np.zeros(box.padded_shape, dtype=np.int64), Boundary(boundary))

    @classmethod
    def from_array(cls, box: BoxSpec, heights, boundary: Boundary | str = Boundary.PINNED_ZERO,
                   outside=None) -> "HeightField":
        """Build a field from box heights.

        ``outside`` sets the halo.  Under pinned-zero it must be omitted.
        Under frozen-initial it may be an int, a full padded array whose
        interior is overwritten by ``heights``, or None to replicate the
        nearest box value.
        """
        boundary = Boundary(boundary)
        heights = np.asarray(heights)
        if heights.shape != box.shape:
            raise ValueError(f"heights have shape {heights.shape}, expected {box.shape}")
        if not np.issubdtype(heights.dtype, np.integer):
            raise TypeError("heights must be integers")
        heights = heights.astype(np.int64)
        if boundary is Boundary.PINNED_ZERO:
            if outside is not None:
                raise ValueError("pinned-zero fields have no configurable halo")
            padded = np.pad(heights, 1)
        elif outside is None:
            padded = np.pad(heights, 1, mode="edge")
        elif np.isscalar(outside):
            padded = np.pad(heights, 1, constant_values=int(outside))
        else:
            padded = np.array(outside, dtype=np.int64)
            if padded.shape != box.padded_shape:
                raise ValueError("halo array must have the padded shape")
            padded[_interior(box)] = heights
        return cls(box, padded, boundary)

    @property
    def heights(self) -> np.ndarray:
        """Read-only view of the box heights, shape ``(2N+1,)*d``."""
        v = self.padded[_interior(self.box)]
        v.flags.writeable = False
        return v

    def flat(self) -> np.ndarray:
        return self.heights.reshape(-1)

    def __getitem__(self, x: Sequence[int]) -> int:
        return self.at(x)

    def at(self, x: Sequence[int]) -> int:
        """Height at any site, using the boundary convention outside the box."""
        x = tuple(x)
        if len(x) != self.box.d:
            raise ValueError("dimension mismatch")
        if self.box.contains(x):
            return int(self.padded[tuple(c + self.box.N + 1 for c in x)])
        if self.boundary is Boundary.PINNED_ZERO:
            return 0
        # beyond the halo, the nearest halo value stands in
        n = self.box.N + 1
        return int(self.padded[tuple(min(max(c, -n), n) + n for c in x)])

    def copy_padded(self) -> np.ndarray:
        return self.padded.copy()

    def with_padded(self, padded: np.ndarray) -> "HeightField":
        return HeightField(self.box, padded, self.boundary)

    def shift(self, c: int) -> "HeightField":
        """Add a constant everywhere the convention stores values.

        Pinned-zero halos stay at zero, so only frozen-initial fields are
        true global shifts.
        """
        p = self.padded.copy()
        if self.boundary is Boundary.PINNED_ZERO:
            p[_interior(self.box)] += c
        else:
            p += c
        return self.with_padded(p)

    def equals(self, other: "HeightField") -> bool:
        return (self.box == other.box and self.boundary == other.boundary
                and np.array_equal(self.padded, other.padded))


@dataclass(frozen=True, eq=False)
class GradientField:
    """Forward differences ``h(x+e_i) - h(x)`` for edges inside the box.

    ``components[i]`` has length ``2N`` along axis ``i`` and ``2N+1`` along
    the other axes; entry ``k`` along axis ``i`` is the edge leaving the
    site with coordinate ``k - N``.
    """

    box: BoxSpec
    components: tuple[np.ndarray, ...]

    def at(self, x: Sequence[int], i: int) -> int:
        idx = tuple(c + self.box.N for c in x)
        return int(self.components[i][idx])

    def is_curl_free(self) -> bool:
        d = self.box.d
        for i, j in itertools.combinations(range(d), 2):
            gi, gj = self.components[i], self.components[j]
            # delta_i(x) + delta_j(x+e_i) == delta_j(x) + delta_i(x+e_j),
            # over x with x+e_i and x+e_j in the box
            lhs = _drop_last(gi, j) + _drop_first(gj, i)
            rhs = _drop_last(gj, i) + _drop_first(gi, j)
            if not np.array_equal(lhs, rhs):
                return False
        return True


def _drop_last(a: np.ndarray, axis: int) -> np.ndarray:
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(None, -1)
    return a[tuple(sl)]


def _drop_first(a: np.ndarray, axis: int) -> np.ndarray:
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(1, None)
    return a[tuple(sl)]


class EmptyGradientError(ValueError):
    """Raised when a box has no edge with both endpoints inside it."""


def gradient_field(h: HeightField) -> GradientField:
    if h.box.N < 1:
        raise EmptyGradientError("box with N=0 has no admissible edge")
    arr = h.heights
    return GradientField(h.box, tuple(np.diff(arr, axis=i) for i in range(h.box.d)))


def path_sum(g: GradientField) -> np.ndarray:
    """Rebuild the origin-centred heights from a gradient field.

    Walks from the origin along axis 0, then axis 1, and so on.
    """
    box, N, d = g.box, g.box.N, g.box.d
    out = np.zeros(box.shape, dtype=np.int64)
    for k in range(d):
        comp = g.components[k]
        # axes after k pinned at coordinate 0
        sl = tuple(slice(None) if j <= k else N for j in range(d))
        line = comp[sl]
        csum = np.cumsum(line, axis=k)
        zero_shape = list(line.shape)
        zero_shape[k] = 1
        csum = np.concatenate([np.zeros(zero_shape, dtype=np.int64), csum], axis=k)
        origin_sl = [slice(None)] * csum.ndim
        origin_sl[k] = slice(N, N + 1)
        csum = csum - csum[tuple(origin_sl)]
        out += csum.reshape(csum.shape + (1,) * (d - k - 1))
    return out


@dataclass(eq=False)
class CenteredSample:
    """A surface shifted so the origin height is 0, restricted to a window.

    ``raw_origin`` is the pre-centring origin height; together with a
    full-box window it lets the dynamics be resumed exactly.
    """

    box: BoxSpec
    heights: np.ndarray
    raw_origin: int = 0
    n_updates: int | None = None
    elapsed: float | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)

    @property
    def window(self) -> int:
        return self.box.N

    def at(self, x: Sequence[int]) -> int:
        return int(self.heights[tuple(c + self.box.N for c in x)])

    def gradient(self) -> GradientField:
        return gradient_field(HeightField.from_array(self.box, self.heights))

    def restrict(self, W: int) -> "CenteredSample":
        if W > self.box.N:
            raise ValueError(f"window {W} exceeds sample half-width {self.box.N}")
        lo = self.box.N - W
        sl = (slice(lo, lo + 2 * W + 1),) * self.box.d
        return CenteredSample(BoxSpec(self.box.d, W), self.heights[sl].copy(), self.raw_origin,
                              self.n_updates, self.elapsed, self.seed, dict(self.params))


class OriginOutsideBoxError(ValueError):
    pass


def recenter(h: HeightField | CenteredSample) -> CenteredSample:
    if isinstance(h, CenteredSample):
        h0 = h.at(h.box.origin)
        return CenteredSample(h.box, h.heights - h0, h.raw_origin + h0, h.n_updates,
                              h.elapsed, h.seed, dict(h.params))
    if not h.box.contains(h.box.origin):
        raise OriginOutsideBoxError("origin not in box")
    arr = np.array(h.heights)
    h0 = int(arr[(h.box.N,) * h.box.d])
    return CenteredSample(h.box, arr - h0, h0)


# -- lattice symmetries --------------------------------------------------------


@dataclass(frozen=True)
class LatticeSymmetry:
    """``s(x)[i] = signs[i] * x[perm[i]]``."""

    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"not a permutation: {self.perm}")
        if len(self.signs) != len(self.perm) or any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"bad signs: {self.signs}")

    @property
    def d(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, d: int) -> "LatticeSymmetry":
        return cls(tuple(range(d)), (1,) * d)

    def __call__(self, x: Sequence[int]) -> Site:
        return tuple(self.signs[i] * x[self.perm[i]] for i in range(self.d))

    def compose(self, inner: "LatticeSymmetry") -> "LatticeSymmetry":
        """``self ∘ inner``."""
        perm = tuple(inner.perm[self.perm[i]] for i in range(self.d))
        signs = tuple(self.signs[i] * inner.signs[self.perm[i]] for i in range(self.d))
        return LatticeSymmetry(perm, signs)

    def inverse(self) -> "LatticeSymmetry":
        inv = [0] * self.d
        for i, p in enumerate(self.perm):
            inv[p] = i
        return LatticeSymmetry(tuple(inv), tuple(self.signs[inv[j]] for j in range(self.d)))


def all_symmetries(d: int) -> list[LatticeSymmetry]:
    return [LatticeSymmetry(p, s)
            for p in itertools.permutations(range(d))
            for s in itertools.product((1, -1), repeat=d)]


def _act(s: LatticeSymmetry, arr: np.ndarray) -> np.ndarray:
    out = np.transpose(arr, s.perm)
    flip = tuple(i for i, sg in enumerate(s.signs) if sg < 0)
    return np.flip(out, axis=flip) if flip else out


def apply_symmetry(s: LatticeSymmetry, h: HeightField) -> HeightField:
    """Push the field forward: ``out(x) = h(s^{-1}(x))``.  Halo included."""
    if s.d != h.box.d:
        raise ValueError("symmetry and field dimensions differ")
    return h.with_padded(np.ascontiguousarray(_act(s, h.padded)))


def iter_box(box: BoxSpec) -> Iterator[Site]:
    return (tuple(c) for c in itertools.product(range(-box.N, box.N + 1), repeat=box.d))


def as_mask(box: BoxSpec, sites: Iterable[Sequence[int]] | np.ndarray | None) -> np.ndarray:
    """Boolean mask over box flat indices; None means the whole box."""
    if sites is None:
        return np.ones(box.size, dtype=bool)
    if isinstance(sites, np.ndarray) and sites.dtype == bool:
        if sites.shape == box.shape:
            return sites.reshape(-1).copy()
        if sites.shape == (box.size,):
            return sites.copy()
        raise ValueError("mask shape does not match box")
    mask = np.zeros(box.size, dtype=bool)
    for x in sites:
        mask[box.index(x)] = True
    return mask
