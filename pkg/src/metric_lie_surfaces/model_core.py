"""Coordinate models of three-dimensional unimodular metric Lie groups.

A group is described by structure constants ``c = (c1, c2, c3)`` and signs
``eps = (eps1, eps2, eps3)`` through the brackets

    [E1, E2] = c3 E3,   [E2, E3] = c1 E1,   [E3, E1] = c2 E2

of a left-invariant orthonormal frame with <Ei, Ei> = eps_i.  Every such
group is realised on the cylinder D x R, with D = {lambda(x, y) > 0}, where
the frame is written explicitly in the coordinates (x, y, z).

Vectors are plain numpy arrays; the :class:`TangentVector3` wrapper is
available when a basis tag is wanted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ._numerics import euclid_cross

SERIES_THRESHOLD = 1e-4


class ModelDomainError(ValueError):
    """A point lies outside the model domain (lambda <= 0)."""


class UnsupportedSignatureError(ValueError):
    pass


class ProductLimitError(ValueError):
    """Raised when Lie-group data is requested from a tau = 0 product model."""


class GroupType(str, enum.Enum):
    SU2 = "SU2"
    SL2 = "SL2R~"
    E2 = "E2~"
    SOL = "Sol3"
    NIL = "Nil3"
    R3 = "R3"


class Family(str, enum.Enum):
    EKT = "EKT"
    LKT = "LKT"
    LKT_HAT = "LKT_HAT"


@dataclass(frozen=True)
class FamilyInfo:
    """Membership in one of the families E(kappa,tau), L(kappa,tau), L^(kappa,tau).

    ``killing_index`` is the (0-based) index of the frame field spanning the
    fibre direction; the other two indices carry equal values of eps_i c_i.
    """

    family: Family
    kappa: float
    tau: float
    killing_index: int


@dataclass(frozen=True)
class MetricLieGroupModel:
    c: Tuple[float, float, float]
    eps: Tuple[int, int, int]
    mu: Tuple[float, float, float]
    a: Tuple[float, float, float]
    group_type: GroupType
    iso_dim: int
    is_global: bool
    family: Optional[FamilyInfo] = None
    # relabel[i] is the index in the published presentation of the family
    # that canonical index i came from (identity unless relabeled)
    relabel: Tuple[int, int, int] = (0, 1, 2)
    product_limit: bool = field(default=False, init=False)

    @property
    def c_arr(self) -> np.ndarray:
        return np.array(self.c, dtype=float)

    @property
    def eps_arr(self) -> np.ndarray:
        return np.array(self.eps, dtype=float)

    @property
    def mu_arr(self) -> np.ndarray:
        return np.array(self.mu, dtype=float)

    @property
    def a_arr(self) -> np.ndarray:
        return np.array(self.a, dtype=float)

    @property
    def riemannian(self) -> bool:
        return self.eps == (1, 1, 1)

    # frame geometry protocol, shared with ProductLimitModel
    def lam(self, x, y):
        return lam(self, x, y)

    def frame_matrix(self, p):
        return frame_matrix(self, p)

    def frame_matrix_inverse(self, p):
        return frame_matrix_inverse(self, p)

    def frame_inverse_gradient(self, p):
        return frame_inverse_gradient(self, p)

    def connection_coefficients(self, p):
        table = connection_table(self)
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(table, p.shape[:-1] + (3, 3, 3))


@dataclass(frozen=True)
class TangentVector3:
    """Ambient vector with a basis tag: ``"coord"`` (d/dx, d/dy, d/dz) or ``"frame"`` (E1, E2, E3)."""

    components: Tuple[float, float, float]
    basis: str = "frame"

    def to_frame(self, model, p) -> "TangentVector3":
        if self.basis == "frame":
            return self
        w = frame_matrix_inverse(model, np.asarray(p, float)) @ np.asarray(self.components)
        return TangentVector3(tuple(w), "frame")

    def to_coord(self, model, p) -> "TangentVector3":
        if self.basis == "coord":
            return self
        w = frame_matrix(model, np.asarray(p, float)) @ np.asarray(self.components)
        return TangentVector3(tuple(w), "coord")


# ---------------------------------------------------------------------------
# construction and classification
# ---------------------------------------------------------------------------

def _check_signature(eps: Sequence[int]) -> Tuple[int, int, int]:
    e = tuple(int(round(x)) for x in eps)
    if len(e) != 3 or any(x not in (-1, 1) for x in e) or any(abs(x - y) > 0 for x, y in zip(e, eps)):
        raise UnsupportedSignatureError(f"signs must be +-1, got {tuple(eps)}")
    if e not in ((1, 1, 1), (1, 1, -1)):
        raise UnsupportedSignatureError(
            f"supported signatures are (1,1,1) and (1,1,-1), got {e}")
    return e


def structure_mu(c: np.ndarray, eps: np.ndarray) -> np.ndarray:
    ec = eps * c
    return np.array([
        (-ec[0] + ec[1] + ec[2]) / 2.0,
        (ec[0] - ec[1] + ec[2]) / 2.0,
        (ec[0] + ec[1] - ec[2]) / 2.0,
    ])


def structure_a(c: np.ndarray, eps: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return np.array([
        eps[0] * mu[1] * mu[2] - c[0] * mu[0],
        eps[1] * mu[0] * mu[2] - c[1] * mu[1],
        eps[2] * mu[0] * mu[1] - c[2] * mu[2],
    ])


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def classify_group(c: Sequence[float], tol: float = 1e-12) -> GroupType:
    """Underlying Lie group from the signs of the structure constants.

    The bracket relations do not involve the metric, so the sign pattern of
    c up to permutation and a global sign change decides the group.
    """
    s = [0 if abs(x) <= tol else (1 if x > 0 else -1) for x in c]
    nz = [x for x in s if x != 0]
    if not nz:
        return GroupType.R3
    if len(nz) == 1:
        return GroupType.NIL
    if len(nz) == 2:
        return GroupType.E2 if nz[0] == nz[1] else GroupType.SOL
    return GroupType.SU2 if len(set(nz)) == 1 else GroupType.SL2


def isometry_dimension(c: np.ndarray, eps: np.ndarray, tol: float = 1e-12) -> int:
    mu = structure_mu(c, eps)
    p = [mu[0] * mu[1], mu[1] * mu[2], mu[2] * mu[0]]
    if _close(p[0], p[1], tol) and _close(p[1], p[2], tol):
        return 6
    ec = eps * c
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        if _close(ec[i], ec[j], tol) and not _close(ec[i], ec[k], tol) and abs(c[k]) > tol:
            return 4
    return 3


def global_model(c: Sequence[float]) -> bool:
    return bool(c[0] * c[2] <= 0 and c[1] * c[2] <= 0)


def _detect_family(c: np.ndarray, eps: np.ndarray, tol: float = 1e-12) -> Optional[FamilyInfo]:
    if isometry_dimension(c, eps, tol) != 4:
        return None
    ec = eps * c
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        if _close(ec[i], ec[j], tol) and not _close(ec[i], ec[k], tol) and abs(c[k]) > tol:
            tau = eps[k] * c[k] / 2.0
            pair = ec[i]
            sign = float(np.prod(eps))
            kappa = 2.0 * tau * pair * sign
            if sign > 0:
                fam = Family.EKT
            elif eps[k] < 0:
                fam = Family.LKT
            else:
                fam = Family.LKT_HAT
            return FamilyInfo(fam, float(kappa), float(tau), k)
    return None


def make_model(c: Sequence[float], eps: Sequence[int] = (1, 1, 1), *,
               relabel: Tuple[int, int, int] = (0, 1, 2)) -> MetricLieGroupModel:
    """Build a model from structure constants and signs, with all derived data."""
    e = _check_signature(eps)
    c_arr = np.array([float(x) for x in c])
    if c_arr.shape != (3,) or not np.all(np.isfinite(c_arr)):
        raise ValueError(f"structure constants must be three finite reals, got {c}")
    e_arr = np.array(e, dtype=float)
    mu = structure_mu(c_arr, e_arr)
    a = structure_a(c_arr, e_arr, mu)
    return MetricLieGroupModel(
        c=tuple(float(x) for x in c_arr),
        eps=e,
        mu=tuple(float(x) for x in mu),
        a=tuple(float(x) for x in a),
        group_type=classify_group(c_arr),
        iso_dim=isometry_dimension(c_arr, e_arr),
        is_global=global_model(c_arr),
        family=_detect_family(c_arr, e_arr),
        relabel=relabel,
    )


def make_dim4_model(family, kappa: float, tau: float):
    """Model of E(kappa,tau), L(kappa,tau) or L^(kappa,tau).

    The family L^ is published with signs (1,-1,1); it is cyclically
    relabeled to the canonical signature (1,1,-1), which keeps the bracket
    relations (and the orientation) intact.  ``relabel`` records, for each
    canonical index, the published index it came from.

    For tau = 0 there is no Lie group; a :class:`ProductLimitModel` carrying
    only the limit metric and its orthonormal frame is returned instead.
    """
    fam = Family(family)
    kappa = float(kappa)
    tau = float(tau)
    if tau == 0.0:
        return ProductLimitModel(fam, kappa)
    if fam is Family.EKT:
        return make_model((kappa / (2 * tau), kappa / (2 * tau), 2 * tau), (1, 1, 1))
    if fam is Family.LKT:
        return make_model((-kappa / (2 * tau), -kappa / (2 * tau), -2 * tau), (1, 1, -1))
    published = (-kappa / (2 * tau), kappa / (2 * tau), 2 * tau)
    # canonical index i <- published index (i + 2) % 3: the published timelike
    # E2 becomes the canonical E3
    perm = (2, 0, 1)
    c = tuple(published[p] for p in perm)
    return make_model(c, (1, 1, -1), relabel=perm)


def model_from_spec(spec: dict):
    """Parse the JSON group description used by the command line."""
    if "family" in spec:
        return make_dim4_model(spec["family"], float(spec["kappa"]), float(spec["tau"]))
    if "c" not in spec:
        raise ValueError("group spec needs either 'c' (with optional 'eps') or 'family'")
    return make_model(spec["c"], spec.get("eps", (1, 1, 1)))


# ---------------------------------------------------------------------------
# coordinate model
# ---------------------------------------------------------------------------

def _c1c2(model_or_product) -> float:
    if isinstance(model_or_product, (int, float)):
        return float(model_or_product)
    return model_or_product.c[0] * model_or_product.c[1]


def cs_eval(model, z):
    """The functions c(z), s(z) solving c' = -c1 c2 s, s' = c, c(0) = 1, s(0) = 0.

    ``model`` may also be the product c1*c2 itself.  Near t = c1 c2 z^2 = 0 the
    power series in t are used so the values are analytic in the parameters.
    """
    k = _c1c2(model)
    z = np.asarray(z, dtype=float)
    t = k * z * z
    c = np.empty_like(z)
    s = np.empty_like(z)
    small = np.abs(t) < SERIES_THRESHOLD
    ts = t[small]
    # alpha(t) = sum (-1)^n t^n/(2n)!, beta(t) = sum (-1)^n t^n/(2n+1)!
    c[small] = 1.0 - ts / 2.0 + ts ** 2 / 24.0 - ts ** 3 / 720.0
    s[small] = z[small] * (1.0 - ts / 6.0 + ts ** 2 / 120.0 - ts ** 3 / 5040.0)
    big = ~small
    if k > 0:
        r = np.sqrt(k)
        c[big] = np.cos(r * z[big])
        s[big] = np.sin(r * z[big]) / r
    elif k < 0:
        r = np.sqrt(-k)
        c[big] = np.cosh(r * z[big])
        s[big] = np.sinh(r * z[big]) / r
    if c.ndim == 0:
        return float(c), float(s)
    return c, s


def lam(model, x, y):
    c1, c2, c3 = model.c
    return 1.0 / (1.0 + 0.25 * c3 * (c2 * np.asarray(x) ** 2 + c1 * np.asarray(y) ** 2))


def _lam_checked(model, p: np.ndarray) -> np.ndarray:
    c1, c2, c3 = model.c
    den = 1.0 + 0.25 * c3 * (c2 * p[..., 0] ** 2 + c1 * p[..., 1] ** 2)
    if np.any(~(den > 0)):
        bad = np.argwhere(np.atleast_1d(~(den > 0)))
        raise ModelDomainError(f"point(s) outside the model domain (lambda <= 0), first at index {bad[0].tolist()}")
    return 1.0 / den


def frame_matrix(model, p) -> np.ndarray:
    """B(p): columns are E1, E2, E3 written in the coordinate basis."""
    p = np.asarray(p, dtype=float)
    c1, c2, c3 = model.c
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    L = _lam_checked(model, p)
    c, s = cs_eval(c1 * c2, z)
    B = np.zeros(p.shape[:-1] + (3, 3))
    B[..., 0, 0] = c / L
    B[..., 1, 0] = c2 * s / L
    B[..., 2, 0] = 0.5 * c3 * (c2 * x * s - y * c)
    B[..., 0, 1] = -c1 * s / L
    B[..., 1, 1] = c / L
    B[..., 2, 1] = 0.5 * c3 * (x * c + c1 * y * s)
    B[..., 2, 2] = 1.0
    return B


def frame_matrix_inverse(model, p) -> np.ndarray:
    """B(p)^-1 in closed form: row i holds the coordinate coefficients of the dual 1-form of Ei."""
    p = np.asarray(p, dtype=float)
    c1, c2, c3 = model.c
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    L = _lam_checked(model, p)
    c, s = cs_eval(c1 * c2, z)
    Bi = np.zeros(p.shape[:-1] + (3, 3))
    Bi[..., 0, 0] = L * c
    Bi[..., 0, 1] = c1 * L * s
    Bi[..., 1, 0] = -c2 * L * s
    Bi[..., 1, 1] = L * c
    Bi[..., 2, 0] = 0.5 * c3 * y * L
    Bi[..., 2, 1] = -0.5 * c3 * x * L
    Bi[..., 2, 2] = 1.0
    return Bi


def frame_inverse_gradient(model, p) -> np.ndarray:
    """Partial derivatives of B^-1: entry [..., m, i, j] is d(B^-1)_ij / dx_m."""
    p = np.asarray(p, dtype=float)
    c1, c2, c3 = model.c
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    L = _lam_checked(model, p)
    c, s = cs_eval(c1 * c2, z)
    Lx = -L * L * 0.5 * c3 * c2 * x
    Ly = -L * L * 0.5 * c3 * c1 * y
    dc, ds = -c1 * c2 * s, c
    G = np.zeros(p.shape[:-1] + (3, 3, 3))
    for m, (dL, dcm, dsm) in enumerate(((Lx, 0.0, 0.0), (Ly, 0.0, 0.0), (0.0 * L, dc, ds))):
        G[..., m, 0, 0] = dL * c + L * dcm
        G[..., m, 0, 1] = c1 * (dL * s + L * dsm)
        G[..., m, 1, 0] = -c2 * (dL * s + L * dsm)
        G[..., m, 1, 1] = dL * c + L * dcm
        G[..., m, 2, 0] = 0.5 * c3 * y * dL
        G[..., m, 2, 1] = -0.5 * c3 * x * dL
    G[..., 1, 2, 0] += 0.5 * c3 * L
    G[..., 0, 2, 1] += -0.5 * c3 * L
    return G


@dataclass(frozen=True)
class Frame:
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    B: np.ndarray
    B_inv: np.ndarray


def frame_at(model, p) -> Frame:
    p = np.asarray(p, dtype=float)
    B = model.frame_matrix(p)
    Bi = model.frame_matrix_inverse(p)
    return Frame(B[..., :, 0], B[..., :, 1], B[..., :, 2], B, Bi)


def metric_at(model, p) -> np.ndarray:
    """Coordinate expression of the metric, B^-T diag(eps) B^-1."""
    Bi = model.frame_matrix_inverse(np.asarray(p, dtype=float))
    return np.swapaxes(Bi, -1, -2) @ (np.asarray(model.eps, float)[:, None] * Bi)


def _to_frame(model, v, p, basis):
    v = np.asarray(v, dtype=float)
    if basis == "frame":
        return v
    if basis != "coord":
        raise ValueError(f"basis must be 'frame' or 'coord', got {basis!r}")
    return (model.frame_matrix_inverse(np.asarray(p, float)) @ v[..., None])[..., 0]


def inner(model, u, v, p=None, basis: str = "frame"):
    """<u, v> for vectors in the left-invariant frame (default) or coordinate basis."""
    uu = _to_frame(model, u, p, basis)
    vv = _to_frame(model, v, p, basis)
    return np.sum(np.asarray(model.eps, float) * uu * vv, axis=-1)


def cross(model, u, v, p=None, basis: str = "frame"):
    """eps-cross product: <u x v, w> is the determinant of frame coordinates.

    The result is returned in the same basis as the inputs.
    """
    uu = _to_frame(model, u, p, basis)
    vv = _to_frame(model, v, p, basis)
    w = np.asarray(model.eps, float) * euclid_cross(uu, vv)
    if basis == "coord":
        return (model.frame_matrix(np.asarray(p, float)) @ w[..., None])[..., 0]
    return w


# ---------------------------------------------------------------------------
# connection and curvature (frame components, constant coefficients)
# ---------------------------------------------------------------------------

def connection_table(model) -> np.ndarray:
    """G[i, j, :] are the frame components of nabla_{Ei} Ej."""
    e1, e2, e3 = model.eps
    m1, m2, m3 = model.mu
    G = np.zeros((3, 3, 3))
    G[0, 1, 2] = e3 * m1
    G[0, 2, 1] = -e2 * m1
    G[1, 0, 2] = -e3 * m2
    G[1, 2, 0] = e1 * m2
    G[2, 0, 1] = e2 * m3
    G[2, 1, 0] = -e1 * m3
    return G


def connection(model, i: int, j: int) -> np.ndarray:
    """nabla_{Ei} Ej in frame components (0-based indices)."""
    return connection_table(model)[i, j].copy()


def christoffel_frame(model) -> np.ndarray:
    """Gamma[k, i, j] = eps_k <nabla_{Ei} Ej, Ek> (equal to the k-th frame component)."""
    return np.transpose(connection_table(model), (2, 0, 1)).copy()


def curvature_R(model, X, Y, Z, p=None) -> np.ndarray:
    """R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, frame components.

    Evaluated through the closed form sum_i a_i eps_j eps_k R_i, where R_i is
    built from the metric and the i-th frame field; the value does not
    depend on the point because every ingredient is left-invariant.
    """
    eps = np.asarray(model.eps, float)
    a = np.asarray(model.a, float)
    X, Y, Z = (np.asarray(w, dtype=float) for w in (X, Y, Z))

    def ip(u, v):
        return np.sum(eps * u * v, axis=-1)[..., None]

    out = np.zeros(np.broadcast(X, Y, Z).shape)
    xz, yz = ip(X, Z), ip(Y, Z)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        Ei = np.zeros(3)
        Ei[i] = 1.0
        zi = eps[i] * Z[..., i:i + 1]
        xi = eps[i] * X[..., i:i + 1]
        yi = eps[i] * Y[..., i:i + 1]
        Ri = (xz * Y - yz * X
              - eps[i] * zi * xi * Y + eps[i] * zi * yi * X
              - eps[i] * yi * xz * Ei + eps[i] * xi * yz * Ei)
        out = out + a[i] * eps[j] * eps[k] * Ri
    return out


def curvature_from_connection(model, X, Y, Z) -> np.ndarray:
    """Same tensor assembled directly from the connection table and brackets."""
    G = connection_table(model)
    c = np.asarray(model.c, float)
    X, Y, Z = (np.asarray(w, dtype=float) for w in (X, Y, Z))

    def nab(U, V):  # left-invariant U, V
        return np.einsum("...i,...j,ijk->...k", U, V, G)

    def bracket(U, V):
        return np.stack([
            c[0] * (U[..., 1] * V[..., 2] - U[..., 2] * V[..., 1]),
            c[1] * (U[..., 2] * V[..., 0] - U[..., 0] * V[..., 2]),
            c[2] * (U[..., 0] * V[..., 1] - U[..., 1] * V[..., 0]),
        ], axis=-1)

    return nab(X, nab(Y, Z)) - nab(Y, nab(X, Z)) - nab(bracket(X, Y), Z)


def sectional_curvature(model, X, Y) -> np.ndarray:
    eps = np.asarray(model.eps, float)
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)

    def ip(u, v):
        return np.sum(eps * u * v, axis=-1)

    num = ip(curvature_R(model, X, Y, Y), X)
    den = ip(X, X) * ip(Y, Y) - ip(X, Y) ** 2
    return num / den


def ricci_eigenvalues(model) -> np.ndarray:
    e = np.prod(model.eps)
    m1, m2, m3 = model.mu
    return 2.0 * e * np.array([m2 * m3, m1 * m3, m1 * m2])


# ---------------------------------------------------------------------------
# covering maps and group law
# ---------------------------------------------------------------------------

def cover_map(model, p) -> Tuple[np.ndarray, np.ndarray]:
    """Covering of the cylinder model onto the quadric |a|^2 + |b|^2 = 1 (SU(2)) or |a|^2 - |b|^2 = 1 (SL2).

    Defined when c1, c2, c3 > 0 (SU(2) branch) or c1, c2 > 0 > c3 (SL2 branch).
    """
    c1, c2, c3 = model.c
    if not (c1 > 0 and c2 > 0 and c3 != 0):
        raise ValueError(f"no covering map for structure constants {model.c}")
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    den = 1.0 + 0.25 * c3 * (c2 * x ** 2 + c1 * y ** 2)
    if np.any(den <= 0):
        raise ModelDomainError("point outside the model domain")
    phase = np.exp(0.5j * np.sqrt(c1 * c2) * z) / np.sqrt(den)
    k1 = 0.5 * np.sqrt(abs(c1 * c3))
    k2 = 0.5 * np.sqrt(abs(c2 * c3))
    return phase, (k1 * y + 1j * k2 * x) * phase


def cover_fields(model, a, b) -> np.ndarray:
    """Left-invariant fields X1, X2, X3 on the quadric, as rows of complex pairs (da, db)."""
    c1, c2, c3 = model.c
    k3 = 0.5 * np.sqrt(c1 * c2)
    k1 = 0.5 * np.sqrt(abs(c2 * c3))
    k2 = 0.5 * np.sqrt(abs(c1 * c3))
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if c3 > 0:
        X1 = k1 * np.stack([-1j * np.conj(b), 1j * np.conj(a)], -1)
        X2 = k2 * np.stack([-np.conj(b), np.conj(a)], -1)
    else:
        X1 = k1 * np.stack([1j * np.conj(b), 1j * np.conj(a)], -1)
        X2 = k2 * np.stack([np.conj(b), np.conj(a)], -1)
    X3 = k3 * np.stack([1j * a, 1j * b], -1)
    return np.stack([X1, X2, X3], axis=-2)


def is_global(model) -> bool:
    return global_model(model.c)


def semidirect_multiply(model, p, q) -> np.ndarray:
    """Group law of R^2 x_A R (c3 = 0): (p, z)(q, w) = (p + exp(zA) q, z + w)."""
    c1, c2, c3 = model.c
    if c3 != 0:
        raise ValueError("the explicit semidirect-product law needs c3 = 0")
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    c, s = cs_eval(c1 * c2, p[..., 2])
    x = p[..., 0] + c * q[..., 0] - c1 * s * q[..., 1]
    y = p[..., 1] + c2 * s * q[..., 0] + c * q[..., 1]
    return np.stack([x, y, p[..., 2] + q[..., 2]], axis=-1)


# ---------------------------------------------------------------------------
# tau = 0 limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductLimitModel:
    """Product limits M^2(kappa) x R, M^2(kappa) x R_1 and M^2_1(kappa) x R.

    Only the metric and an orthonormal frame (not left-invariant) are
    available; the fibre field d/dz is the Killing direction.  Frame indices
    follow the canonical signature (1,1,-1) for the Lorentzian families.
    """

    family: Family
    kappa: float
    product_limit: bool = field(default=True, init=False)

    @property
    def tau(self) -> float:
        return 0.0

    @property
    def eps(self) -> Tuple[int, int, int]:
        return (1, 1, 1) if self.family is Family.EKT else (1, 1, -1)

    @property
    def eps_arr(self) -> np.ndarray:
        return np.array(self.eps, dtype=float)

    @property
    def riemannian(self) -> bool:
        return self.family is Family.EKT

    @property
    def killing_index(self) -> int:
        return 0 if self.family is Family.LKT_HAT else 2

    def _perm(self):
        # canonical index -> (x-like, y-like, fibre) slot
        return (2, 0, 1) if self.family is Family.LKT_HAT else (0, 1, 2)

    def _ysign(self) -> float:
        return -1.0 if self.family is Family.LKT_HAT else 1.0

    def lam(self, x, y):
        return 1.0 / (1.0 + 0.25 * self.kappa * (np.asarray(x) ** 2 + self._ysign() * np.asarray(y) ** 2))

    def _lam_checked(self, p):
        den = 1.0 + 0.25 * self.kappa * (p[..., 0] ** 2 + self._ysign() * p[..., 1] ** 2)
        if np.any(~(den > 0)):
            raise ModelDomainError("point(s) outside the model domain (lambda <= 0)")
        return 1.0 / den

    def _base_frame(self, p):
        L = self._lam_checked(p)
        B = np.zeros(p.shape[:-1] + (3, 3))
        B[..., 0, 0] = 1.0 / L
        B[..., 1, 1] = 1.0 / L
        B[..., 2, 2] = 1.0
        return B

    def frame_matrix(self, p):
        p = np.asarray(p, dtype=float)
        return self._base_frame(p)[..., :, list(self._perm())]

    def frame_matrix_inverse(self, p):
        p = np.asarray(p, dtype=float)
        L = self._lam_checked(p)
        Bi = np.zeros(p.shape[:-1] + (3, 3))
        Bi[..., 0, 0] = L
        Bi[..., 1, 1] = L
        Bi[..., 2, 2] = 1.0
        return Bi[..., list(self._perm()), :]

    def frame_inverse_gradient(self, p):
        p = np.asarray(p, dtype=float)
        L = self._lam_checked(p)
        G = np.zeros(p.shape[:-1] + (3, 3, 3))
        dLx = -L * L * 0.5 * self.kappa * p[..., 0]
        dLy = -L * L * 0.5 * self.kappa * self._ysign() * p[..., 1]
        for m, d in ((0, dLx), (1, dLy)):
            G[..., m, 0, 0] = d
            G[..., m, 1, 1] = d
        return G[..., :, list(self._perm()), :]

    def connection_coefficients(self, p):
        """Frame components of nabla_{Ei} Ej at p, from the Koszul formula."""
        p = np.asarray(p, dtype=float)
        # [F1, F2] = a F1 + b F2 for the base frame F1 = dx/lam, F2 = dy/lam
        a = -0.5 * self.kappa * self._ysign() * p[..., 1]
        b = 0.5 * self.kappa * p[..., 0]
        e_base = np.array([1.0, self._ysign(), 1.0])
        if self.family is Family.LKT:
            e_base = np.array([1.0, 1.0, -1.0])
        C = np.zeros(p.shape[:-1] + (3, 3, 3))  # C[i, j, k]: k-component of [Fi, Fj]
        C[..., 0, 1, 0] = a
        C[..., 0, 1, 1] = b
        C[..., 1, 0, 0] = -a
        C[..., 1, 0, 1] = -b
        # Koszul: <nabla_i Fj, Fk> = (<[i,j],k> - <[j,k],i> + <[k,i],j>)/2
        low = C * e_base  # lower the last index
        conn_low = 0.5 * (low - np.einsum("...jki->...ijk", low) + np.einsum("...kij->...ijk", low))
        G = conn_low * e_base  # raise: component k = eps_k <., Fk>
        perm = list(self._perm())
        return G[..., perm, :, :][..., :, perm, :][..., :, :, perm]


def metric_from_frame(model, p) -> np.ndarray:
    Bi = model.frame_matrix_inverse(np.asarray(p, dtype=float))
    return np.swapaxes(Bi, -1, -2) @ (np.asarray(model.eps, float)[:, None] * Bi)
