"""Tensor grids over (s, r) = (|t|, |z|) with the cylindrical measure.

Functions with cylindrical symmetry w(t, z) = theta(|t|, |z|) reduce every
integral over R^N = R^k x R^(N-k) to a 2D weighted integral,

    int f dx  =  c_k c_(N-k)  int int  f(s, r) s^(k-1) r^(N-k-1) ds dr,

where c_m is the surface area of the unit sphere in R^m.  For k = 0 there
is no tangential variable; the grid collapses to a single s node and the
s factor is dropped from the measure.

Two quadrature views coexist on the same nodes:

* ``integrate`` uses the spec'd nodal weights (measure density times dual
  cell area, vanishing exactly on the singular axes), a midpoint-type rule
  adequate for integrands that stay finite off the axes;
* the ``cell_mass`` family integrates the measure (optionally with an extra
  r^(-tau) factor) exactly over dual cells, which is what the solver and
  the moment quadratures use so that the weight singularity at r = 0 is
  handled by product integration instead of nodal sampling.

The Dirichlet energy is discretized in finite-volume form: the stiffness
matrix below is the exact Hessian of

    E[theta] = sum over mesh edges of (d theta / d edge)^2 * (strip mass),

a symmetric positive definite M-matrix whose associated discrete Laplacian
(-M theta / cell mass) is the package's discrete cylindrical Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import gamma as _gamma

from .params import ProblemParams


def sphere_area(m: int) -> float:
    """Surface area of the unit sphere S^(m-1) in R^m; equals 2 for m = 1."""
    if m < 1:
        raise ValueError("sphere_area needs m >= 1")
    return 2.0 * np.pi ** (m / 2.0) / _gamma(m / 2.0)


def sinh_nodes(x_max: float, n: int, alpha: float) -> np.ndarray:
    """n nodes on [0, x_max], clustered near 0 by a sinh map.

    alpha controls the grading strength: spacing grows roughly like
    cosh(alpha * xi) along the axis, i.e. near-uniform fine spacing in the
    core and geometric coarsening toward the truncation radius.
    """
    xi = np.linspace(0.0, 1.0, n)
    return x_max * np.sinh(alpha * xi) / np.sinh(alpha)


def _power_cell_masses(nodes: np.ndarray, exponent: float, coeff: float) -> np.ndarray:
    """Exact integrals of coeff * x^exponent over the dual cells of ``nodes``.

    Dual cell i is [x_(i-1/2), x_(i+1/2)] with half-points midway between
    nodes, clamped at the domain ends.  Requires exponent > -1.
    """
    if exponent <= -1.0:
        raise ValueError("non-integrable axis exponent")
    edges = np.empty(len(nodes) + 1)
    edges[1:-1] = 0.5 * (nodes[1:] + nodes[:-1])
    edges[0] = nodes[0]
    edges[-1] = nodes[-1]
    prim = coeff * edges ** (exponent + 1.0) / (exponent + 1.0)
    return np.diff(prim)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Tensor grid over (s, r) in [0, s_max] x [0, r_max] with measure data.

    Immutable after construction; all operations are pure.  (eq=False keeps
    the dataclass hashable by identity so per-grid caches work.)
    """

    params: ProblemParams
    s_nodes: np.ndarray
    r_nodes: np.ndarray

    @classmethod
    def make(cls, params: ProblemParams, s_max: float, r_max: float,
             n_s: int, n_r: int, grading_alpha: float = 8.0) -> "Grid2D":
        """Build a sinh-graded grid; for k = 0 the s axis collapses to {0}."""
        if r_max <= 0 or n_r < 8:
            raise ValueError("need r_max > 0 and n_r >= 8")
        if params.k == 0:
            s_nodes = np.zeros(1)
        else:
            if s_max <= 0 or n_s < 8:
                raise ValueError("need s_max > 0 and n_s >= 8 for k >= 1")
            s_nodes = sinh_nodes(s_max, n_s, grading_alpha)
        r_nodes = sinh_nodes(r_max, n_r, grading_alpha)
        return cls(params, s_nodes, r_nodes)

    # -- basic geometry -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return (len(self.s_nodes), len(self.r_nodes))

    @property
    def s_max(self) -> float:
        return float(self.s_nodes[-1])

    @property
    def r_max(self) -> float:
        return float(self.r_nodes[-1])

    def meshgrid(self):
        """(S, R) arrays of shape ``self.shape`` (indexing='ij')."""
        return np.meshgrid(self.s_nodes, self.r_nodes, indexing="ij")

    def radius(self) -> np.ndarray:
        """|x| = sqrt(s^2 + r^2) at every node."""
        S, R = self.meshgrid()
        return np.hypot(S, R)

    def measure_weight(self, s, r):
        """Cylindrical measure density c_k c_(N-k) s^(k-1) r^(N-k-1).

        The s factor (including c_k) is dropped when k = 0; c_1 = 2.
        """
        k, m = self.params.k, self.params.m
        r_part = sphere_area(m) * np.asarray(r, dtype=float) ** (m - 1)
        if k == 0:
            return r_part * np.ones_like(np.asarray(s, dtype=float))
        return sphere_area(k) * np.asarray(s, dtype=float) ** (k - 1) * r_part

    # -- quadrature weights ----------------------------------------------

    @property
    def node_weights(self) -> np.ndarray:
        """Nodal quadrature weights: measure density times dual-cell area.

        Vanish exactly where the density does: s = 0 for k >= 2 and r = 0
        for N - k >= 2.  Used by :meth:`integrate`.
        """
        return self._node_weights()

    @lru_cache(maxsize=None)
    def _node_weights(self) -> np.ndarray:
        k = self.params.k
        if k == 0:
            ds = np.ones(1)
        else:
            ds = _power_cell_masses(self.s_nodes, 0.0, 1.0)
        dr = _power_cell_masses(self.r_nodes, 0.0, 1.0)
        S, R = self.meshgrid()
        w = self.measure_weight(S, R) * np.outer(ds, dr)
        w.flags.writeable = False
        return w

    @lru_cache(maxsize=None)
    def cell_mass(self, tau: float = 0.0) -> np.ndarray:
        """Exact dual-cell masses of the measure times r^(-tau).

        tau = 0 gives the plain cylindrical volume of each dual cell; the
        constraint integral of the ground-state problem uses tau = sigma.
        """
        k, m = self.params.k, self.params.m
        if k == 0:
            ms = np.ones(1)
        else:
            ms = _power_cell_masses(self.s_nodes, k - 1.0, sphere_area(k))
        mr = _power_cell_masses(self.r_nodes, m - 1.0 - tau, sphere_area(m))
        out = np.outer(ms, mr)
        out.flags.writeable = False
        return out

    def integrate(self, values) -> float:
        """Quadrature with the cylindrical measure (spec'd nodal weights).

        ``values`` is an array of nodal integrand values (shape
        ``self.shape``) or a callable evaluated on the meshgrid.  Nodes with
        zero weight are skipped, so integrands may be singular there; a
        non-finite value at a positively weighted node raises ValueError.
        """
        if callable(values):
            values = values(*self.meshgrid())
        vals = np.asarray(values, dtype=float)
        if vals.shape != self.shape:
            raise ValueError(f"integrand shape {vals.shape} != grid shape {self.shape}")
        w = self.node_weights
        mask = w > 0.0
        if not np.all(np.isfinite(vals[mask])):
            raise ValueError("non-finite integrand value at a positively weighted node")
        return float(np.sum(vals[mask] * w[mask]))

    def integrate_cellwise(self, values, tau: float = 0.0) -> float:
        """Quadrature with exact dual-cell masses of measure * r^(-tau).

        The integrand must be finite at every node (the singular factor
        r^(-tau) lives in the weight, not in ``values``).
        """
        vals = np.asarray(values, dtype=float)
        if vals.shape != self.shape:
            raise ValueError(f"integrand shape {vals.shape} != grid shape {self.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite integrand value")
        return float(np.sum(vals * self.cell_mass(tau)))

    def cylinder_volume(self) -> float:
        """Closed-form volume of {|t| < s_max} x {|z| < r_max}."""
        k, m = self.params.k, self.params.m
        vol_r = sphere_area(m) * self.r_max ** m / m
        if k == 0:
            return vol_r
        return sphere_area(k) * self.s_max ** k / k * vol_r

    # -- finite-volume Dirichlet energy ----------------------------------

    @lru_cache(maxsize=None)
    def _edge_weights(self):
        """(a_s, a_r): energy weights of s- and r-edges.

        a_s[i, j] weights (theta[i+1, j] - theta[i, j])^2, and likewise for
        a_r; the weight is the measure density at the edge midpoint times
        the swept strip volume over the squared edge length.  The midpoint
        density (rather than the strip average) keeps the induced flux
        operator pointwise consistent down to the first cells at the axes.
        """
        k, m = self.params.k, self.params.m
        if k == 0:
            cellm_s = np.ones(1)
        else:
            cellm_s = _power_cell_masses(self.s_nodes, k - 1.0, sphere_area(k))
        cellm_r = _power_cell_masses(self.r_nodes, m - 1.0, sphere_area(m))

        ds = np.diff(self.s_nodes)
        dr = np.diff(self.r_nodes)
        s_face = 0.5 * (self.s_nodes[1:] + self.s_nodes[:-1])
        r_face = 0.5 * (self.r_nodes[1:] + self.r_nodes[:-1])
        if k:
            face_s = sphere_area(k) * s_face ** (k - 1)
            a_s = np.outer(face_s / ds, cellm_r)
        else:
            a_s = np.zeros((0, len(self.r_nodes)))
        face_r = sphere_area(m) * r_face ** (m - 1)
        a_r = np.outer(cellm_s, face_r / dr)
        a_s.flags.writeable = False
        a_r.flags.writeable = False
        return a_s, a_r

    def dirichlet_energy(self, theta: np.ndarray) -> float:
        """Finite-volume Dirichlet energy int |grad w|^2 of theta(s, r)."""
        a_s, a_r = self._edge_weights()
        e = float(np.sum(a_r * np.diff(theta, axis=1) ** 2))
        if self.params.k:
            e += float(np.sum(a_s * np.diff(theta, axis=0) ** 2))
        return e

    def stiffness_apply(self, theta: np.ndarray) -> np.ndarray:
        """M theta where M is the Hessian/2 of :meth:`dirichlet_energy`."""
        a_s, a_r = self._edge_weights()
        out = np.zeros_like(theta)
        d = a_r * np.diff(theta, axis=1)
        out[:, :-1] -= d
        out[:, 1:] += d
        if self.params.k:
            d = a_s * np.diff(theta, axis=0)
            out[:-1, :] -= d
            out[1:, :] += d
        return out

    def discrete_laplacian(self, theta: np.ndarray) -> np.ndarray:
        """Discrete cylindrical Laplacian, -(M theta) / (dual-cell mass).

        Second-order consistent with
        theta_ss + (k-1)/s theta_s + theta_rr + (N-k-1)/r theta_r
        away from the axes on smoothly graded meshes; at the axes it
        realizes the natural zero-flux condition.
        """
        return -self.stiffness_apply(theta) / self.cell_mass(0.0)

    def interior_mask(self) -> np.ndarray:
        """Nodes away from the truncation boundary (used for residual sups)."""
        mask = np.ones(self.shape, dtype=bool)
        mask[:, -1] = False
        if self.params.k:
            mask[-1, :] = False
        return mask

    @lru_cache(maxsize=None)
    def robin_weights(self) -> np.ndarray:
        """Diagonal radiation weights matching the |x|^(2-N) far field.

        A decaying tail w ~ C |x|^(2-N) satisfies d_n w = -beta w on the
        truncation faces with beta = (N-2) x_n / |x|^2; the induced boundary
        energy  sum beta * (face mass) * w^2  reproduces the Dirichlet
        energy of the discarded tail at leading order, so the truncated
        functional approximates the full-space one without forcing an
        artificial boundary layer.
        """
        N, k, m = self.params.N, self.params.k, self.params.m
        out = np.zeros(self.shape)
        if k == 0:
            cm_s = np.ones(1)
        else:
            cm_s = _power_cell_masses(self.s_nodes, k - 1.0, sphere_area(k))
        cm_r = _power_cell_masses(self.r_nodes, m - 1.0, sphere_area(m))
        R = self.r_max
        area_r = cm_s * (sphere_area(m) * R ** (m - 1))
        out[:, -1] += (N - 2.0) * R / (self.s_nodes**2 + R**2) * area_r
        if k:
            Sm = self.s_max
            area_s = cm_r * (sphere_area(k) * Sm ** (k - 1))
            out[-1, :] += (N - 2.0) * Sm / (Sm**2 + self.r_nodes**2) * area_s
        out.flags.writeable = False
        return out

    def energy(self, theta: np.ndarray) -> float:
        """Dirichlet energy with the radiation boundary correction.

        Approximates the full-space int |grad w|^2 for profiles with the
        |x|^(2-N) far field; this is the solver's objective.
        """
        return self.dirichlet_energy(theta) + float(
            np.sum(self.robin_weights() * theta**2)
        )

    def stiffness_apply_robin(self, theta: np.ndarray) -> np.ndarray:
        """M theta for the radiation-corrected energy (all nodes unknown)."""
        return self.stiffness_apply(theta) + self.robin_weights() * theta

    @lru_cache(maxsize=None)
    def stiffness_matrix(self):
        """(M, mask): sparse SPD matrix of the radiation-corrected energy.

        All nodes are unknowns (mask is all-true; kept for interface
        symmetry with row ordering ``np.flatnonzero(mask)``).
        """
        n_s, n_r = self.shape
        a_s, a_r = self._edge_weights()
        mask = np.ones(self.shape, dtype=bool)
        idx = np.arange(mask.size).reshape(self.shape)

        rows, cols, vals = [], [], []

        def add_edges(i0, j0, i1, j1, a):
            id0, id1 = idx[i0, j0].ravel(), idx[i1, j1].ravel()
            a = a.ravel()
            rows.extend([id0, id1, id0, id1])
            cols.extend([id0, id1, id1, id0])
            vals.extend([a, a, -a, -a])

        I, J = np.meshgrid(np.arange(n_s), np.arange(n_r - 1), indexing="ij")
        add_edges(I, J, I, J + 1, a_r[I, J])
        if self.params.k:
            I, J = np.meshgrid(np.arange(n_s - 1), np.arange(n_r), indexing="ij")
            add_edges(I, J, I + 1, J, a_s[I, J])
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(self.robin_weights().ravel())

        n = mask.size
        M = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsc()
        return M, mask
