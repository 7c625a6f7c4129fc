"""Fundamental data of surfaces and numerical compatibility residuals.

A surface is sampled on a uniform (u, v) grid.  Every grid array is shaped
``(n_u, n_v, ...)`` (``indexing="ij"``).  Tangent vectors are stored by
their components in the adapted orthonormal frame {e1, e2}; ambient vectors
by their components in the left-invariant frame {E1, E2, E3}.

Conventions
-----------
* ``eh`` holds the surface signs (<e1,e1>, <e2,e2>, <N,N>); e1 is always
  spacelike and points along d/du, e2 lies in the (d/du, d/dv) half plane
  containing d/dv, and N completes a positively oriented frame.
* ``S[a, b]`` is the a-th component of S e_b.
* ``T[..., i, :]`` holds the components of the tangent projection of E_i.
* ``M[..., :, b]`` holds the E-frame components of e1, e2, N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ._numerics import euclid_cross, fd_partials, grid_diff, grid_diff2

DEFAULT_FD_STEP = 2e-3


class DegenerateMetricError(ValueError):
    """The induced metric is (nearly) degenerate or d/du is not spacelike."""

    def __init__(self, message: str, indices=None):
        super().__init__(message)
        self.indices = indices


class GridTooSmallError(ValueError):
    pass


# ---------------------------------------------------------------------------
# surface representations
# ---------------------------------------------------------------------------

@dataclass
class SurfacePatch:
    """Chart (u, v) -> (x, y, z) of a surface in a cylinder model.

    ``position`` must accept broadcastable arrays u, v and return an array of
    shape ``u.shape + (3,)``.  If ``partials`` is given it must return the
    tuple (f_u, f_v, f_uu, f_uv, f_vv); otherwise fourth-order central
    differences of step ``h`` are used.
    """

    model: object
    position: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: Tuple[float, float, float, float]
    partials: Optional[Callable] = None
    h: float = DEFAULT_FD_STEP

    def __call__(self, u, v) -> np.ndarray:
        return self.position(np.asarray(u, float), np.asarray(v, float))

    def derivatives(self, u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        if self.partials is not None:
            return self.partials(u, v)
        return fd_partials(self.position, u, v, self.h)

    def grid(self, n_u: int, n_v: int):
        u0, u1, v0, v1 = self.domain
        return np.linspace(u0, u1, n_u), np.linspace(v0, v1, n_v)

    def sample(self, n_u: int, n_v: int) -> "GridSurface":
        us, vs = self.grid(n_u, n_v)
        U, V = np.meshgrid(us, vs, indexing="ij")
        P = self(U, V)
        fu, fv, fuu, fuv, fvv = self.derivatives(U, V)
        return GridSurface(self.model, us, vs, P, fu, fv, fuu, fuv, fvv)


@dataclass
class GridSurface:
    """Surface samples on a uniform grid together with first and second partials."""

    model: object
    u: np.ndarray
    v: np.ndarray
    P: np.ndarray
    Pu: np.ndarray
    Pv: np.ndarray
    Puu: np.ndarray
    Puv: np.ndarray
    Pvv: np.ndarray

    @property
    def hu(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def hv(self) -> float:
        return float(self.v[1] - self.v[0])

    @classmethod
    def from_points(cls, model, u, v, P) -> "GridSurface":
        """Differentiate gridded positions with fourth-order stencils."""
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        P = np.asarray(P, float)
        if P.shape != (len(u), len(v), 3):
            raise ValueError(f"positions must have shape {(len(u), len(v), 3)}, got {P.shape}")
        if len(u) < 6 or len(v) < 6:
            raise GridTooSmallError("need at least 6 samples in each direction")
        hu = u[1] - u[0]
        hv = v[1] - v[0]
        Pu = grid_diff(P, hu, 0)
        Pv = grid_diff(P, hv, 1)
        return cls(model, u, v, P, Pu, Pv, grid_diff2(P, hu, 0), grid_diff(Pu, hv, 1), grid_diff2(P, hv, 1))


def _as_grid(patch, n_u=None, n_v=None) -> GridSurface:
    if isinstance(patch, GridSurface):
        return patch
    if n_u is None or n_v is None:
        raise ValueError("sampling a SurfacePatch needs n_u and n_v")
    return patch.sample(n_u, n_v)


# ---------------------------------------------------------------------------
# pointwise linear algebra
# ---------------------------------------------------------------------------

def eps_inner(eps, a, b):
    return np.sum(np.asarray(eps, float) * a * b, axis=-1)


def eps_cross(eps, a, b):
    """Cross product for the form diag(eps): <a x b, c> = det(a, b, c)."""
    return np.asarray(eps, float) * euclid_cross(a, b)


def j_matrix(eh) -> np.ndarray:
    """Matrix of J (J e1 = eh2 e2, J e2 = -eh1 e1) acting on frame components."""
    return np.array([[0.0, -eh[0]], [eh[1], 0.0]])


def apply_j(eh, X):
    return np.einsum("ab,...b->...a", j_matrix(eh), X)


def tangent_inner(eh, X, Y):
    return eh[0] * X[..., 0] * Y[..., 0] + eh[1] * X[..., 1] * Y[..., 1]


def first_fundamental_form(patch: SurfacePatch, u, v) -> np.ndarray:
    """Induced metric [[E, F], [F, G]] at the parameter values (u, v)."""
    P = patch(u, v)
    fu, fv = patch.derivatives(u, v)[:2]
    Bi = patch.model.frame_matrix_inverse(P)
    wu = np.einsum("...ij,...j->...i", Bi, fu)
    wv = np.einsum("...ij,...j->...i", Bi, fv)
    eps = patch.model.eps
    I = np.empty(np.shape(P)[:-1] + (2, 2))
    I[..., 0, 0] = eps_inner(eps, wu, wu)
    I[..., 0, 1] = I[..., 1, 0] = eps_inner(eps, wu, wv)
    I[..., 1, 1] = eps_inner(eps, wv, wv)
    return I


def _frame_from_tangents(eps, wu, wv, det_tol: float = 1e-12):
    """Adapted frame from the E-components of d/du and d/dv.

    Returns (e1, e2, N, eh, F) where F[:, a] are the (u, v) components of e_a.
    """
    eps = np.asarray(eps, float)
    E = eps_inner(eps, wu, wu)
    Fm = eps_inner(eps, wu, wv)
    G = eps_inner(eps, wv, wv)
    det = E * G - Fm * Fm
    scale = np.maximum(np.abs(E), 1e-300) * np.maximum(np.abs(G), 1e-300)
    bad = (np.abs(det) <= det_tol * scale) | ~np.isfinite(det)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))
        raise DegenerateMetricError(
            f"degenerate induced metric at {len(idx)} point(s), first at grid index {idx[0].tolist()}",
            idx)
    if np.any(E <= 0):
        idx = np.argwhere(np.atleast_1d(E <= 0))
        raise DegenerateMetricError(
            f"d/du is not spacelike at {len(idx)} point(s), first at grid index {idx[0].tolist()}; "
            "only frames with spacelike e1 are supported", idx)
    sig = np.sign(det)
    if not (np.all(sig > 0) or np.all(sig < 0)):
        raise DegenerateMetricError("the causal character of the surface changes across the grid")
    eh1 = 1.0
    eh2 = float(sig.flat[0])
    eh3 = float(np.prod(eps)) * eh1 * eh2
    nu_ = np.sqrt(E)
    e1 = wu / nu_[..., None]
    proj = Fm / nu_  # <wv, e1>
    r = wv - (eh1 * proj)[..., None] * e1
    n2 = np.sqrt(np.abs(eps_inner(eps, r, r)))
    e2 = r / n2[..., None]
    n = eps_cross(eps, e1, e2)
    orient = np.sign(np.linalg.det(np.stack([e1, e2, n], axis=-1)))
    N = n * orient[..., None] / np.sqrt(np.abs(eps_inner(eps, n, n)))[..., None]
    F = np.zeros(np.shape(E) + (2, 2))
    F[..., 0, 0] = 1.0 / nu_
    F[..., 0, 1] = -eh1 * proj / (nu_ * n2)
    F[..., 1, 1] = 1.0 / n2
    return e1, e2, N, (eh1, eh2, eh3), F


def adapted_frame(patch: SurfacePatch, u, v):
    """(e1, e2, N, eh) at (u, v); vectors in E-frame components."""
    P = patch(u, v)
    fu, fv = patch.derivatives(u, v)[:2]
    Bi = patch.model.frame_matrix_inverse(P)
    wu = np.einsum("...ij,...j->...i", Bi, fu)
    wv = np.einsum("...ij,...j->...i", Bi, fv)
    e1, e2, N, eh, _ = _frame_from_tangents(patch.model.eps, wu, wv)
    return e1, e2, N, eh


# ---------------------------------------------------------------------------
# intrinsic geometry on the grid
# ---------------------------------------------------------------------------

class IntrinsicGeometry:
    """Levi-Civita data of an orthonormal frame field on a uniform grid.

    ``F[..., :, a]`` are the (u, v) components of e_a.  The connection form
    omega^1_2 = p omega^1 + q omega^2 is recovered from the structure
    equations d omega^i + omega^i_k ^ omega^k = 0 and the Gauss curvature
    from d omega^1_2.
    """

    def __init__(self, u, v, F, eh):
        self.u = np.asarray(u, float)
        self.v = np.asarray(v, float)
        if len(self.u) < 6 or len(self.v) < 6:
            raise GridTooSmallError("need at least 6 samples in each direction")
        self.hu = float(self.u[1] - self.u[0])
        self.hv = float(self.v[1] - self.v[0])
        self.F = np.asarray(F, float)
        self.eh = tuple(float(x) for x in eh)
        self.W = np.linalg.inv(self.F)
        detW = np.linalg.det(self.W)
        W = self.W
        D = np.stack([(self.du(W[..., a, 1]) - self.dv(W[..., a, 0])) / detW for a in range(2)], -1)
        e12 = self.eh[0] * self.eh[1]
        self.p = -D[..., 0]
        self.q = -e12 * D[..., 1]
        cu = self.p * W[..., 0, 0] + self.q * W[..., 1, 0]
        cv = self.p * W[..., 0, 1] + self.q * W[..., 1, 1]
        self.K = self.eh[1] * (self.du(cv) - self.dv(cu)) / detW

    def du(self, f):
        return grid_diff(f, self.hu, 0)

    def dv(self, f):
        return grid_diff(f, self.hv, 1)

    def e_deriv(self, f) -> np.ndarray:
        """Derivatives (e1 f, e2 f) stacked in the last axis."""
        fu = self.du(f)
        fv = self.dv(f)
        F = self.F.reshape(self.F.shape[:2] + (1,) * (np.ndim(f) - 2) + (2, 2))
        return np.stack([F[..., 0, a] * fu + F[..., 1, a] * fv for a in range(2)], axis=-1)

    def grad(self, f) -> np.ndarray:
        d = self.e_deriv(f)
        return np.stack([self.eh[0] * d[..., 0], self.eh[1] * d[..., 1]], axis=-1)

    def omega12(self) -> np.ndarray:
        """(omega^1_2(e1), omega^1_2(e2))."""
        return np.stack([self.p, self.q], axis=-1)

    def covariant(self, V) -> np.ndarray:
        """C[..., i, k] = i-th component of nabla_{e_k} V for V given by frame components."""
        d = self.e_deriv(V)  # [..., i, k] = e_k(V^i)
        e12 = self.eh[0] * self.eh[1]
        w12 = self.omega12()
        pad = (1,) * (V.ndim - 3)
        w12 = w12.reshape(w12.shape[:2] + pad + (2,))
        out = d.copy()
        out[..., 0, :] += w12 * V[..., 1:2]
        out[..., 1, :] += -e12 * w12 * V[..., 0:1]
        return out

    def divergence(self, V):
        C = self.covariant(V)
        return C[..., 0, 0] + C[..., 1, 1]

    def bracket12(self) -> np.ndarray:
        """[e1, e2] in frame components."""
        e12 = self.eh[0] * self.eh[1]
        return np.stack([self.p, e12 * self.q], axis=-1)


def brioschi_curvature(E, F, G, hu: float, hv: float) -> np.ndarray:
    """Gauss curvature from the metric coefficients alone (Brioschi formula).

    Valid for either signature of the induced metric; the result is
    sign-consistent with K = eh1 eh2 <R(e1,e2)e2,e1>.
    """
    Eu, Ev = grid_diff(E, hu, 0), grid_diff(E, hv, 1)
    Fu, Fv = grid_diff(F, hu, 0), grid_diff(F, hv, 1)
    Gu, Gv = grid_diff(G, hu, 0), grid_diff(G, hv, 1)
    Evv = grid_diff2(E, hv, 1)
    Guu = grid_diff2(G, hu, 0)
    Fuv = grid_diff(Fu, hv, 1)
    A = np.zeros(E.shape + (3, 3))
    A[..., 0, 0] = -0.5 * Evv + Fuv - 0.5 * Guu
    A[..., 0, 1] = 0.5 * Eu
    A[..., 0, 2] = Fu - 0.5 * Ev
    A[..., 1, 0] = Fv - 0.5 * Gu
    A[..., 1, 1] = E
    A[..., 1, 2] = F
    A[..., 2, 0] = 0.5 * Gv
    A[..., 2, 1] = F
    A[..., 2, 2] = G
    Bm = np.zeros(E.shape + (3, 3))
    Bm[..., 0, 1] = 0.5 * Ev
    Bm[..., 0, 2] = 0.5 * Gu
    Bm[..., 1, 0] = 0.5 * Ev
    Bm[..., 1, 1] = E
    Bm[..., 1, 2] = F
    Bm[..., 2, 0] = 0.5 * Gu
    Bm[..., 2, 1] = F
    Bm[..., 2, 2] = G
    det = E * G - F * F
    return (np.linalg.det(A) - np.linalg.det(Bm)) / det ** 2


# ---------------------------------------------------------------------------
# fundamental data
# ---------------------------------------------------------------------------

@dataclass
class FundamentalData:
    """Gridded fundamental data (S, J, T_i, nu_i, H, K) in the adapted frame."""

    model: object
    u: np.ndarray
    v: np.ndarray
    eh: Tuple[float, float, float]
    S: np.ndarray
    T: np.ndarray
    nu: np.ndarray
    H: np.ndarray
    K: np.ndarray
    M: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None
    _geom: Optional[IntrinsicGeometry] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.H.shape

    @property
    def J(self) -> np.ndarray:
        return j_matrix(self.eh)

    @property
    def geometry(self) -> IntrinsicGeometry:
        if self._geom is None:
            if self.F is None:
                raise ValueError("no intrinsic frame stored with these data")
            self._geom = IntrinsicGeometry(self.u, self.v, self.F, self.eh)
        return self._geom

    def replace(self, **kw) -> "FundamentalData":
        d = dict(model=self.model, u=self.u, v=self.v, eh=self.eh, S=self.S, T=self.T,
                 nu=self.nu, H=self.H, K=self.K, M=self.M, F=self.F, positions=self.positions,
                 _geom=self._geom)
        d.update(kw)
        return FundamentalData(**d)


def mean_curvature(S, eh):
    return 0.5 * eh[2] * (S[..., 0, 0] + S[..., 1, 1])


def shape_determinant(S, eh):
    return S[..., 0, 0] * S[..., 1, 1] - eh[0] * eh[1] * S[..., 1, 0] ** 2


def extract_fundamental_data(patch, n_u: Optional[int] = None, n_v: Optional[int] = None) -> FundamentalData:
    """Sample a patch and compute its fundamental data on the grid."""
    g = _as_grid(patch, n_u, n_v)
    model = g.model
    eps = np.asarray(model.eps, float)
    if not np.all(np.isfinite(g.P)):
        bad = np.argwhere(~np.isfinite(g.P).all(-1))
        raise ValueError(f"non-finite position at grid index {bad[0].tolist()}")
    Bi = model.frame_matrix_inverse(g.P)
    dBi = model.frame_inverse_gradient(g.P)  # [..., m, i, j]
    mv = lambda A, x: np.einsum("...ij,...j->...i", A, x)
    wu = mv(Bi, g.Pu)
    wv = mv(Bi, g.Pv)
    e1, e2, N, eh, F = _frame_from_tangents(eps, wu, wv)

    # second fundamental form h_ij = <N, nabla_{d_i} d_j>
    Gam = model.connection_coefficients(g.P)  # [..., c, b, a]: a-comp of nabla_{Ec} Eb
    tang = {0: (g.Pu, wu), 1: (g.Pv, wv)}
    second = {(0, 0): g.Puu, (0, 1): g.Puv, (1, 1): g.Pvv}
    h = np.empty(g.P.shape[:-1] + (2, 2))
    for (i, j), Pij in second.items():
        Pi, wi = tang[i]
        Pj, wj = tang[j]
        dBi_i = np.einsum("...m,...mab->...ab", Pi, dBi)
        sigma = mv(dBi_i, Pj) + mv(Bi, Pij) + np.einsum("...c,...b,...cba->...a", wi, wj, Gam)
        h[..., i, j] = h[..., j, i] = eps_inner(eps, N, sigma)
    I = np.empty_like(h)
    I[..., 0, 0] = eps_inner(eps, wu, wu)
    I[..., 0, 1] = I[..., 1, 0] = eps_inner(eps, wu, wv)
    I[..., 1, 1] = eps_inner(eps, wv, wv)
    S_coord = np.linalg.solve(I, h)
    W = np.linalg.inv(F)
    S = W @ S_coord @ F

    M = np.stack([e1, e2, N], axis=-1)
    nu = eps * N  # nu_i = <N, E_i>
    # T_i = sum_a eh_a <E_i, e_a> e_a, and <E_i, e_a> = eps_i (e_a)^i
    T = np.stack([eh[a] * eps * M[..., :, a] for a in range(2)], axis=-1)
    geom = IntrinsicGeometry(g.u, g.v, F, eh)
    H = mean_curvature(S, eh)
    return FundamentalData(model, g.u, g.v, eh, S, T, nu, H, geom.K, M, F, g.P, geom)


# ---------------------------------------------------------------------------
# relabeling to the surface signs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Labeling:
    """Cyclic relabeling of the ambient frame so that eps' = eh.

    ``perm[i]`` is the original index of the new i-th frame field.
    """

    perm: Tuple[int, int, int]
    c: np.ndarray
    eps: np.ndarray
    mu: np.ndarray

    def take(self, arr, axis: int = -1):
        return np.take(arr, list(self.perm), axis=axis)

    def put_back(self, arr, axis: int = -1):
        inv = np.argsort(self.perm)
        return np.take(arr, list(inv), axis=axis)


def surface_labeling(model, eh) -> Labeling:
    eps = tuple(int(x) for x in model.eps)
    target = tuple(int(round(x)) for x in eh)
    for s in range(3):
        perm = (s, (s + 1) % 3, (s + 2) % 3)
        if tuple(eps[p] for p in perm) == target:
            c = np.asarray(model.c, float)[list(perm)] if hasattr(model, "c") else None
            mu = np.asarray(model.mu, float)[list(perm)] if hasattr(model, "mu") else None
            return Labeling(perm, c, np.array(target, float), mu)
    raise ValueError(f"surface signs {eh} are not a cyclic permutation of {eps}")


def _lie(model):
    if getattr(model, "product_limit", False):
        raise ValueError("this operation needs a metric Lie group model, not a product limit")
    return model


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Per-equation max / RMS residuals over the interior grid points."""

    fields: Dict[str, np.ndarray]
    margin: int

    def _interior(self, a):
        m = self.margin
        return a[m:a.shape[0] - m, m:a.shape[1] - m] if m else a

    def max(self, name: str) -> float:
        return float(np.max(self._interior(self.fields[name])))

    def rms(self, name: str) -> float:
        a = self._interior(self.fields[name])
        return float(np.sqrt(np.mean(a ** 2)))

    def summary(self) -> Dict[str, Tuple[float, float]]:
        return {k: (self.max(k), self.rms(k)) for k in self.fields}

    @property
    def worst(self) -> float:
        return max(self.max(k) for k in self.fields)


def _vec_norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def codazzi_lhs(data: FundamentalData) -> np.ndarray:
    """nabla_{e1} S e2 - nabla_{e2} S e1 - S[e1, e2] in frame components."""
    geo = data.geometry
    C1 = geo.covariant(data.S[..., :, 1])
    C0 = geo.covariant(data.S[..., :, 0])
    br = geo.bracket12()
    return C1[..., :, 0] - C0[..., :, 1] - np.einsum("...ab,...b->...a", data.S, br)


def compatibility_residuals(data: FundamentalData, margin: int = 2) -> ResidualReport:
    """Residuals of Gauss, Codazzi, the algebraic relations and the derivative equations.

    Dimension-four families (and their product limits) can also be checked
    through :func:`dim4_residuals`; for product limits this function
    delegates to it, since the left-invariant frame is not available.
    """
    model = data.model
    if getattr(model, "product_limit", False):
        return dim4_residuals(data, margin=margin)
    eh = data.eh
    eps = np.asarray(model.eps, float)
    mu = np.asarray(model.mu, float)
    a = np.asarray(model.a, float)
    e123 = float(np.prod(eps))
    S, T, nu = data.S, data.T, data.nu
    geo = data.geometry
    fields: Dict[str, np.ndarray] = {}

    gauss_rhs = eh[2] * shape_determinant(S, eh) - eh[0] * eh[1] * np.sum(a * nu ** 2, axis=-1)
    fields["gauss"] = np.abs(data.K - gauss_rhs)

    Tv = np.einsum("...i,...ia->...a", a * nu, T)
    rhs = e123 * (eh[0] * Tv[..., 0:1] * np.array([0.0, 1.0]) - eh[1] * Tv[..., 1:2] * np.array([1.0, 0.0]))
    fields["codazzi"] = _vec_norm(codazzi_lhs(data) - rhs)

    G = np.einsum("...ia,...ja->...ij", T * np.array(eh[:2]), T)
    target = np.diag(eps) - eh[2] * nu[..., :, None] * nu[..., None, :]
    alg = np.abs(G - target).reshape(G.shape[:-2] + (9,)).max(-1)
    alg = np.maximum(alg, np.abs(np.sum(eps * nu ** 2, -1) - eh[2]))
    alg = np.maximum(alg, _vec_norm(np.einsum("...i,...ia->...a", eps * nu, T)))
    fields["algebraic"] = alg

    for i in range(3):
        j, l = (i + 1) % 3, (i + 2) % 3
        C = geo.covariant(T[..., i, :])  # [..., comp, k]
        res = np.zeros(C.shape[:-2])
        gnu = geo.grad(nu[..., i])
        for k in range(2):
            ek = np.zeros(2)
            ek[k] = 1.0
            Tj_k = eh[k] * T[..., j, k]  # <e_k, T_j>
            Tl_k = eh[k] * T[..., l, k]
            rhs = (eh[2] * nu[..., i, None] * S[..., :, k]
                   + eps[j] * eps[l] * (mu[l] * Tl_k[..., None] * T[..., j, :]
                                        - mu[j] * Tj_k[..., None] * T[..., l, :]))
            res = np.maximum(res, _vec_norm(C[..., :, k] - rhs))
        fields[f"dT{i + 1}"] = res
        rhs_v = (-np.einsum("...ab,...b->...a", S, T[..., i, :])
                 + eps[j] * eps[l] * (mu[l] * nu[..., j, None] * T[..., l, :]
                                      - mu[j] * nu[..., l, None] * T[..., j, :]))
        fields[f"dnu{i + 1}"] = _vec_norm(gnu - rhs_v)
    return ResidualReport(fields, margin)


# ---------------------------------------------------------------------------
# dimension-four fundamental equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dim4Params:
    """Constants entering the dimension-four equations.

    ``k`` is the Killing index, ``ck`` = c_k, ``ek`` = eps_k, ``P`` = eps_i c_i c_k
    for i in the equal pair (finite in the tau -> 0 limit), ``e123`` the
    product of the ambient signs.
    """

    k: int
    ck: float
    ek: float
    P: float
    e123: float

    @property
    def bundle(self) -> float:
        """P - eps_k c_k^2 (equals kappa - 4 tau^2 or -(kappa + 4 tau^2) up to sign conventions)."""
        return self.P - self.ek * self.ck ** 2

    @property
    def tau(self) -> float:
        return 0.5 * self.ek * self.ck


def dim4_params(model) -> Dim4Params:
    if getattr(model, "product_limit", False):
        k = model.killing_index
        eps = model.eps
        P = -model.kappa if model.family.value == "LKT_HAT" else model.kappa
        return Dim4Params(k, 0.0, float(eps[k]), float(P), float(np.prod(eps)))
    fam = getattr(model, "family", None)
    if fam is None:
        raise ValueError("model does not have a four-dimensional isometry group")
    k = fam.killing_index
    i = (k + 1) % 3
    eps = np.asarray(model.eps, float)
    c = np.asarray(model.c, float)
    return Dim4Params(k, float(c[k]), float(eps[k]), float(eps[i] * c[i] * c[k]), float(np.prod(eps)))


def dim4_residuals(data: FundamentalData, params: Optional[Dim4Params] = None,
                   margin: int = 2) -> ResidualReport:
    """Residuals of the reduced equations involving only (S, T_k, nu_k)."""
    pr = params or dim4_params(data.model)
    eh = data.eh
    S = data.S
    Tk = data.T[..., pr.k, :]
    nk = data.nu[..., pr.k]
    geo = data.geometry
    fields: Dict[str, np.ndarray] = {}
    gauss_rhs = eh[2] * shape_determinant(S, eh) + pr.e123 * eh[2] * (
        0.25 * eh[2] * pr.ck ** 2 + pr.bundle * nk ** 2)
    fields["gauss"] = np.abs(data.K - gauss_rhs)

    coef = pr.e123 * pr.bundle * nk
    TkX = eh[0] * Tk[..., 0]  # <e1, T_k>
    TkY = eh[1] * Tk[..., 1]  # <e2, T_k>
    rhs = coef[..., None] * (TkY[..., None] * np.array([1.0, 0.0]) - TkX[..., None] * np.array([0.0, 1.0]))
    fields["codazzi"] = _vec_norm(codazzi_lhs(data) - rhs)

    fields["algebraic"] = np.abs(tangent_inner(eh, Tk, Tk) - (pr.ek - eh[2] * nk ** 2))

    J = j_matrix(eh)
    C = geo.covariant(Tk)
    res = np.zeros(nk.shape)
    for kk in range(2):
        rhs = eh[2] * nk[..., None] * S[..., :, kk] - 0.5 * pr.ek * eh[2] * pr.ck * nk[..., None] * J[:, kk]
        res = np.maximum(res, _vec_norm(C[..., :, kk] - rhs))
    fields["dT"] = res
    rhs_v = -np.einsum("...ab,...b->...a", S, Tk) - 0.5 * pr.ek * pr.ck * apply_j(eh, Tk)
    fields["dnu"] = _vec_norm(geo.grad(nk) - rhs_v)
    return ResidualReport(fields, margin)


# ---------------------------------------------------------------------------
# derived fields
# ---------------------------------------------------------------------------

@dataclass
class DerivedFields:
    zeta: np.ndarray
    psi: np.ndarray
    X: np.ndarray  # [..., alpha, a]
    Tfield: np.ndarray
    psi_consistency: np.ndarray  # |psi - (4 H^2 eh1 eh2 + zeta^2)|


def x_fields(nu, grad_nu, eps, eh) -> np.ndarray:
    """The three fields X_alpha built from the angle functions (signs eps = eh assumed)."""
    J = j_matrix(eh)
    X = np.empty(grad_nu.shape)
    for i in range(3):
        j, l = (i + 1) % 3, (i + 2) % 3
        X[..., i, :] = (np.einsum("ab,...b->...a", J, grad_nu[..., i, :])
                        + eps[j] * eps[l] * (nu[..., l, None] * grad_nu[..., j, :]
                                             - nu[..., j, None] * grad_nu[..., l, :]))
    return X


def psi_from_x(X, nu, eps, eh):
    """psi from the index with the largest |eps_a - eps_3 nu_a^2| (robust quotient)."""
    den = eps - eps[2] * nu ** 2
    idx = np.argmax(np.abs(den), axis=-1)
    XX = tangent_inner(eh, X, X)
    return np.take_along_axis(XX, idx[..., None], -1)[..., 0] / np.take_along_axis(den, idx[..., None], -1)[..., 0]


def angle_gradients(geo: IntrinsicGeometry, nu) -> np.ndarray:
    return np.stack([geo.grad(nu[..., i]) for i in range(3)], axis=-2)


def derived_fields(data: FundamentalData) -> DerivedFields:
    model = _lie(data.model)
    lab = surface_labeling(model, data.eh)
    eh = data.eh
    nu_l = lab.take(data.nu)
    g = angle_gradients(data.geometry, nu_l)
    X_l = x_fields(nu_l, g, lab.eps, eh)
    zeta = np.sum(lab.c * nu_l ** 2, axis=-1)
    psi = psi_from_x(X_l, nu_l, lab.eps, eh)
    a = np.asarray(model.a, float)
    Tf = np.einsum("...i,...ia->...a", a * data.nu, data.T)
    cons = np.abs(psi - (4 * data.H ** 2 * eh[0] * eh[1] + zeta ** 2))
    return DerivedFields(zeta, psi, lab.put_back(X_l, axis=-2), Tf, cons)


def lemma_xi_residuals(nu, geo: IntrinsicGeometry, eps) -> Dict[str, np.ndarray]:
    """Identities satisfied by X_alpha for any map into the quadric sum eps_a nu_a^2 = eps_3.

    The frame signs of ``geo`` must equal ``eps``.  Returns residual grids for
    (a) pairwise proportionality, (b) the Gram matrix and (c) the three
    contractions.
    """
    eps = np.asarray(eps, float)
    eh = geo.eh
    g = angle_gradients(geo, nu)
    X = x_fields(nu, g, eps, eh)
    psi = psi_from_x(X, nu, eps, eh)
    XX = tangent_inner(eh, X, X)
    den = eps - eps[2] * nu ** 2
    ra = np.zeros(psi.shape)
    for al in range(3):
        for be in range(3):
            ra = np.maximum(ra, np.abs(den[..., be] * XX[..., al] - den[..., al] * XX[..., be]))
    gram = np.einsum("...ia,...ja->...ij", X * np.array(eh[:2]), X)
    target = (np.diag(eps) - eps[2] * nu[..., :, None] * nu[..., None, :]) * psi[..., None, None]
    rb = np.abs(gram - target).reshape(gram.shape[:-2] + (9,)).max(-1)
    Jg = np.stack([apply_j(eh, g[..., i, :]) for i in range(3)], axis=-2)
    c1 = np.abs(np.sum(eps * XX, -1) - 2 * psi)
    c2 = np.abs(np.sum(eps * tangent_inner(eh, X, g), -1))
    c3 = np.abs(np.sum(eps * tangent_inner(eh, X, Jg), -1) - psi)
    return {"a": ra, "b": rb, "c": np.maximum(np.maximum(c1, c2), c3), "psi": psi}


# ---------------------------------------------------------------------------
# shape operator from the tangent projections, divergence identities, companions
# ---------------------------------------------------------------------------

def shape_from_T_nu(data: FundamentalData):
    """The unique shape-operator candidate built from T_i and grad nu_i.

    Returns (S, defect, asymmetry) where ``defect`` is the scalar whose
    vanishing characterises self-adjointness and ``asymmetry`` is
    S01 - eh1 eh2 S10 evaluated directly.
    """
    model = _lie(data.model)
    lab = surface_labeling(model, data.eh)
    eh = data.eh
    eps, mu, c = lab.eps, lab.mu, lab.c
    T = lab.take(data.T, axis=-2)
    nu = lab.take(data.nu)
    geo = data.geometry
    dnu = np.stack([geo.e_deriv(nu[..., i]) for i in range(3)], axis=-2)  # <grad nu_i, e_k>
    JT = np.stack([apply_j(eh, T[..., i, :]) for i in range(3)], axis=-2)
    S = np.zeros(nu.shape[:-1] + (2, 2))
    for k in range(2):
        col = np.zeros(nu.shape[:-1] + (2,))
        for al in range(3):
            Tk = eh[k] * T[..., al, k]
            col += eps[al] * (mu[al] * Tk[..., None] * JT[..., al, :] - dnu[..., al, k, None] * T[..., al, :])
        S[..., :, k] = col
    gnu = np.stack([geo.grad(nu[..., i]) for i in range(3)], axis=-2)
    defect = np.sum(eps * tangent_inner(eh, gnu, JT) + np.prod(eps) * c * nu ** 2, axis=-1)
    asym = S[..., 0, 1] - eh[0] * eh[1] * S[..., 1, 0]
    return S, defect, asym


def divergence_identities(data: FundamentalData) -> Dict[str, object]:
    """Residuals of div(T3) = 2H nu3 + (c2 - c1) nu1 nu2 and div(J T3) = c3 nu3.

    The identities are stated for Riemannian ambient spaces; other
    signatures are evaluated as well and flagged.
    """
    model = _lie(data.model)
    c = np.asarray(model.c, float)
    geo = data.geometry
    T3 = data.T[..., 2, :]
    nu = data.nu
    r1 = geo.divergence(T3) - (2 * data.H * nu[..., 2] + (c[1] - c[0]) * nu[..., 0] * nu[..., 1])
    r2 = geo.divergence(apply_j(data.eh, T3)) - c[2] * nu[..., 2]
    return {"div_T3": np.abs(r1), "div_JT3": np.abs(r2), "riemannian": bool(model.riemannian)}


def companion_residual(data: FundamentalData, h_floor: float = 1e-8) -> np.ndarray:
    """Residual of zeta grad log|H| = grad zeta + sum eps_a mu_a nu_a J X_a.

    Points with |H| below ``h_floor`` are masked with NaN.
    """
    model = _lie(data.model)
    lab = surface_labeling(model, data.eh)
    eh = data.eh
    geo = data.geometry
    nu = lab.take(data.nu)
    g = angle_gradients(geo, nu)
    X = x_fields(nu, g, lab.eps, eh)
    zeta = np.sum(lab.c * nu ** 2, -1)
    absH = np.abs(data.H)
    logH = np.log(np.where(absH > h_floor, absH, 1.0))
    lhs = zeta[..., None] * geo.grad(logH)
    JX = np.stack([apply_j(eh, X[..., i, :]) for i in range(3)], axis=-2)
    rhs = geo.grad(zeta) + np.einsum("...i,...ia->...a", lab.eps * lab.mu * nu, JX)
    res = _vec_norm(lhs - rhs)
    return np.where(absH > h_floor, res, np.nan)


def jt_identity_residual(data: FundamentalData) -> np.ndarray:
    """|J T_i - eps_j eps_l (nu_l T_j - nu_j T_l)| maximised over i (cyclic i, j, l)."""
    eps = np.asarray(data.model.eps, float)
    out = np.zeros(data.H.shape)
    for i in range(3):
        j, l = (i + 1) % 3, (i + 2) % 3
        lhs = apply_j(data.eh, data.T[..., i, :])
        rhs = eps[j] * eps[l] * (data.nu[..., l, None] * data.T[..., j, :] - data.nu[..., j, None] * data.T[..., l, :])
        out = np.maximum(out, _vec_norm(lhs - rhs))
    return out


def interior(a, margin: int = 2):
    return a[margin:a.shape[0] - margin, margin:a.shape[1] - margin]
