"""Cartesian disk grid with mirror-point ghosts for the perpendicular condition.

The fixed-boundary cylinder scenario evolves a graph over the disk rho <= R.
Nodes are cell-centered (never exactly on the rim circle) with one pad ring,
so every stencil and every mirror interpolation stays inside the stored
array.  A ghost node g outside the circle takes the value of its mirror
point m = (2R/|g| - 1) g inside, which enforces du/drho = 0 at the rim to
second order; mirror values are bilinear in the surrounding cell, and the
resulting ghost-ghost coupling is solved once by sparse LU.

Quadrature weights are exact cell-disk intersection areas, with the coverage
of cells centered outside the circle lumped onto the nearest inside node, so
the weights sum to pi R^2 to machine precision and the flat-disk volume is
exact; on curved states the rim lumping costs one order, i.e. quadrature
accuracy O(h) localized on an O(h) band.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def _circ_antiderivative(x: float, R: float) -> float:
    """Antiderivative of sqrt(R^2 - x^2)."""
    x = min(max(x, -R), R)
    return 0.5 * (x * np.sqrt(max(R * R - x * x, 0.0)) + R * R * np.arcsin(x / R))


def _cell_disk_area(x0: float, x1: float, y0: float, y1: float, R: float) -> float:
    """Exact area of [x0,x1]x[y0,y1] intersected with the disk of radius R.

    Integrates clip(yc, y0, y1) - clip(-yc, y0, y1) over x with
    yc = sqrt(R^2 - x^2), splitting at the points where a clip switches
    branch; each piece is constant or a circular-segment antiderivative.
    """
    x0 = max(x0, -R)
    x1 = min(x1, R)
    if x1 <= x0 or y0 >= R or y1 <= -R:
        return 0.0
    cuts = {x0, x1}
    for y in (y0, y1):
        if abs(y) <= R:
            xc = float(np.sqrt(max(R * R - y * y, 0.0)))
            for s in (-xc, xc):
                if x0 < s < x1:
                    cuts.add(s)
    xs = sorted(cuts)
    total = 0.0
    for a, b in zip(xs[:-1], xs[1:]):
        xm = 0.5 * (a + b)
        yc = float(np.sqrt(max(R * R - xm * xm, 0.0)))
        if yc <= y0 or -yc >= y1:
            continue  # strip misses the band
        if yc < y1:   # curved upper boundary
            upper = _circ_antiderivative(b, R) - _circ_antiderivative(a, R)
        else:
            upper = y1 * (b - a)
        if -yc > y0:  # curved lower boundary
            lower = -(_circ_antiderivative(b, R) - _circ_antiderivative(a, R))
        else:
            lower = y0 * (b - a)
        total += upper - lower
    return max(total, 0.0)


class DiskGrid:
    def __init__(self, n: int, radius: float = 1.0):
        if n < 5:
            raise ValueError("disk grid needs at least 5 nodes per axis")
        self.n = int(n)
        self.radius = float(radius)
        self.h = 2.0 * self.radius / self.n
        m = self.n + 2  # one pad ring per side
        idx = np.arange(m)
        self.coord = -self.radius + (idx - 0.5) * self.h
        self.X, self.Y = np.meshgrid(self.coord, self.coord, indexing="ij")
        self.r = np.hypot(self.X, self.Y)
        self.inside = self.r < self.radius
        self._build_ghosts()
        self._build_weights()
        self._build_boundary_ring()

    # -- ghost machinery ---------------------------------------------------

    def _neighbors_of_inside(self) -> np.ndarray:
        grown = np.zeros_like(self.inside)
        ins = self.inside
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                sl_src = (slice(max(0, -di), ins.shape[0] - max(0, di)),
                          slice(max(0, -dj), ins.shape[1] - max(0, dj)))
                sl_dst = (slice(max(0, di), ins.shape[0] - max(0, -di)),
                          slice(max(0, dj), ins.shape[1] - max(0, -dj)))
                grown[sl_dst] |= ins[sl_src]
        return grown & ~ins

    def _mirror_cell(self, i: int, j: int):
        """Bilinear cell and weights of the mirror point of ghost (i, j)."""
        xg, yg = self.coord[i], self.coord[j]
        d = float(np.hypot(xg, yg))
        scale = (2.0 * self.radius - d) / d
        xm, ym = xg * scale, yg * scale
        fi = (xm - self.coord[0]) / self.h
        fj = (ym - self.coord[0]) / self.h
        i0, j0 = int(np.floor(fi)), int(np.floor(fj))
        tx, ty = fi - i0, fj - j0
        corners = [(i0, j0), (i0 + 1, j0), (i0, j0 + 1), (i0 + 1, j0 + 1)]
        weights = [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty]
        return corners, weights

    def _build_ghosts(self) -> None:
        m = self.inside.shape[0]
        ghost = self._neighbors_of_inside()
        rows = {}
        pending = [tuple(p) for p in np.argwhere(ghost)]
        while pending:
            nxt = []
            for (i, j) in pending:
                if (i, j) in rows:
                    continue
                corners, weights = self._mirror_cell(i, j)
                rows[(i, j)] = (corners, weights)
                for (ci, cj) in corners:
                    if not self.inside[ci, cj] and (ci, cj) not in rows:
                        nxt.append((ci, cj))
            pending = nxt
        self.ghost_nodes = sorted(rows)
        gindex = {g: k for k, g in enumerate(self.ghost_nodes)}
        n_in = int(self.inside.sum())
        in_flat = np.flatnonzero(self.inside.ravel())
        in_index = {f: k for k, f in enumerate(in_flat)}
        self.inside_flat = in_flat

        agi_r, agi_c, agi_v = [], [], []
        agg_r, agg_c, agg_v = [], [], []
        for k, g in enumerate(self.ghost_nodes):
            corners, weights = rows[g]
            for (ci, cj), w in zip(corners, weights):
                if w == 0.0:
                    continue
                if self.inside[ci, cj]:
                    agi_r.append(k)
                    agi_c.append(in_index[ci * m + cj])
                    agi_v.append(w)
                else:
                    agg_r.append(k)
                    agg_c.append(gindex[(ci, cj)])
                    agg_v.append(w)
        n_g = len(self.ghost_nodes)
        self._A_gi = sp.csr_matrix((agi_v, (agi_r, agi_c)), shape=(n_g, n_in))
        A_gg = sp.csr_matrix((agg_v, (agg_r, agg_c)), shape=(n_g, n_g))
        self._ghost_lu = spla.splu(sp.csc_matrix(sp.eye(n_g) - A_gg))
        self.ghost_idx = (
            np.array([g[0] for g in self.ghost_nodes], dtype=int),
            np.array([g[1] for g in self.ghost_nodes], dtype=int),
        )

    def fill_ghosts(self, u: np.ndarray) -> np.ndarray:
        """Return a copy of u with ghost entries set by mirror reflection."""
        out = u.copy()
        rhs = self._A_gi @ u[self.inside]
        out[self.ghost_idx] = self._ghost_lu.solve(rhs)
        return out

    # -- quadrature and monitor geometry ------------------------------------

    def _build_weights(self) -> None:
        R, h = self.radius, self.h
        rmin = np.hypot(np.maximum(np.abs(self.X) - h / 2, 0.0),
                        np.maximum(np.abs(self.Y) - h / 2, 0.0))
        rmax = np.hypot(np.abs(self.X) + h / 2, np.abs(self.Y) + h / 2)
        w = np.zeros_like(self.X)
        w[rmax < R] = h * h
        rim = (rmin < R) & (rmax >= R)
        for i, j in np.argwhere(rim):
            w[i, j] = _cell_disk_area(
                self.X[i, j] - h / 2, self.X[i, j] + h / 2,
                self.Y[i, j] - h / 2, self.Y[i, j] + h / 2, R,
            )
        # coverage of cells whose node sits outside the circle is lumped onto
        # the nearest inside node along the inward ray (O(h^2) consistent)
        for i, j in np.argwhere(rim & ~self.inside):
            xi, yj = self.X[i, j], self.Y[i, j]
            r = float(np.hypot(xi, yj))
            step = 0
            while step < 4:
                step += 1
                scale = (r - step * 0.7 * h) / r
                ii = int(round((xi * scale - self.coord[0]) / h))
                jj = int(round((yj * scale - self.coord[0]) / h))
                if self.inside[ii, jj]:
                    w[ii, jj] += w[i, j]
                    break
            w[i, j] = 0.0
        self.area_weights = w

    def _build_boundary_ring(self, n_angles: int | None = None) -> None:
        if n_angles is None:
            n_angles = min(4 * self.n, 128)
        self.ring_angles = (np.arange(n_angles) + 0.5) * (2.0 * np.pi / n_angles)
        self.deep = self._erode(self._erode(self.inside))
        # mirror-ghost second derivatives are only O(1) in a ~2-cell rim band,
        # so boundary monitors sample an offset circle inside the clean zone;
        # all bilinear cells below stay strictly inside the disk
        self.ring_offset = 2.0 * self.h
        self.ring_radius = self.radius - self.ring_offset
        self.ring_delta = 1.5 * self.h
        ca, sa = np.cos(self.ring_angles), np.sin(self.ring_angles)
        self._ray_samplers = []
        for k in range(3):
            rr = self.ring_radius - k * self.ring_delta
            self._ray_samplers.append(self._bilinear_operator(rr * ca, rr * sa))

    def _bilinear_operator(self, xs, ys) -> sp.csr_matrix:
        mshape = self.X.shape[0]
        fi = (np.asarray(xs) - self.coord[0]) / self.h
        fj = (np.asarray(ys) - self.coord[0]) / self.h
        i0 = np.clip(np.floor(fi).astype(int), 0, mshape - 2)
        j0 = np.clip(np.floor(fj).astype(int), 0, mshape - 2)
        tx, ty = fi - i0, fj - j0
        rows = np.repeat(np.arange(xs.size), 4)
        cols = np.stack([
            i0 * mshape + j0, (i0 + 1) * mshape + j0,
            i0 * mshape + j0 + 1, (i0 + 1) * mshape + j0 + 1,
        ], axis=-1).ravel()
        vals = np.stack([
            (1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty,
        ], axis=-1).ravel()
        return sp.csr_matrix((vals, (rows, cols)), shape=(xs.size, mshape * mshape))

    @staticmethod
    def _erode(mask: np.ndarray) -> np.ndarray:
        out = mask.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                out[1:-1, 1:-1] &= mask[1 + di:mask.shape[0] - 1 + di,
                                        1 + dj:mask.shape[1] - 1 + dj]
        out[0, :] = out[-1, :] = out[:, 0] = out[:, -1] = False
        return out

    def interp(self, w: np.ndarray, xs, ys):
        """Bilinear sample of a (ghost-filled) field at physical points."""
        fi = (np.asarray(xs, dtype=float) - self.coord[0]) / self.h
        fj = (np.asarray(ys, dtype=float) - self.coord[0]) / self.h
        i0 = np.clip(np.floor(fi).astype(int), 0, w.shape[0] - 2)
        j0 = np.clip(np.floor(fj).astype(int), 0, w.shape[1] - 2)
        tx, ty = fi - i0, fj - j0
        return ((1 - tx) * (1 - ty) * w[i0, j0] + tx * (1 - ty) * w[i0 + 1, j0]
                + (1 - tx) * ty * w[i0, j0 + 1] + tx * ty * w[i0 + 1, j0 + 1])

    def radial_derivative_at_rim(self, w: np.ndarray):
        """One-sided second-order d(w)/drho at the monitor ring, per angle.

        Samples the field at radii R_off - k*1.5h (all cells strictly inside
        the disk, no ghost values involved) and applies the outward 3-point
        formula; evaluating the boundary identities on the offset ring costs
        one order, consistent with the monitors' >= 1 target.
        """
        flat = w.ravel()
        vals = [S @ flat for S in self._ray_samplers]
        return (3.0 * vals[0] - 4.0 * vals[1] + vals[2]) / (2.0 * self.ring_delta)

    def rim_values(self, w: np.ndarray):
        """Field values on the monitor ring (radius R - 2h)."""
        return self._ray_samplers[0] @ w.ravel()


_CACHE: dict[tuple[int, float], DiskGrid] = {}


def disk_grid(n: int, radius: float = 1.0) -> DiskGrid:
    key = (int(n), float(radius))
    if key not in _CACHE:
        _CACHE[key] = DiskGrid(*key)
    return _CACHE[key]
