"""Rebuilding immersions from prescribed fundamental data.

Three routes are provided:

* from the tangent projections T_i: the change-of-frame matrix M is known
  pointwise, so only the position equation d(phi) = B(phi) M omega is
  integrated;
* from the angle functions nu_i and a sign for H: the T_i are solved
  algebraically and the previous route is used;
* for spaces with four-dimensional isometry group, from (S, T_k, nu_k):
  the frame equation M^-1 dM = Theta is integrated first and then the
  position equation.

Frame-level computations (Theta, Darboux derivative, frame integration)
happen in a cyclic relabeling of the ambient frame in which the surface
signs coincide with the ambient ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._numerics import cubic_midpoints, eps_gram_schmidt, expm_so_eps
from .model_core import ModelDomainError, connection_table
from .surface_geometry import (
    FundamentalData,
    GridSurface,
    IntrinsicGeometry,
    Labeling,
    angle_gradients,
    apply_j,
    compatibility_residuals,
    dim4_params,
    dim4_residuals,
    eps_cross,
    mean_curvature,
    psi_from_x,
    shape_from_T_nu,
    surface_labeling,
    tangent_inner,
    x_fields,
)


class ReconstructionError(Exception):
    """Base class for reconstruction failures."""


class HypothesisError(ReconstructionError):
    """Prescribed data violate a hypothesis of the existence theorem."""

    def __init__(self, message: str, condition: str = "", report: Optional[dict] = None):
        super().__init__(message)
        self.condition = condition
        self.report = report or {}


class IntegrationError(ReconstructionError):
    """Numerical integration failed (domain exit, blow-up)."""


# ---------------------------------------------------------------------------
# data containers
# ---------------------------------------------------------------------------

@dataclass
class FrameField:
    """Grid of change-of-frame matrices; columns are e1, e2, N in E-components."""

    M: np.ndarray
    eps: np.ndarray

    def group_defect(self) -> float:
        E = np.diag(self.eps)
        d = np.swapaxes(self.M, -1, -2) @ E @ self.M - E
        return float(np.max(np.abs(d)))

    def det_defect(self) -> float:
        return float(np.max(np.abs(np.linalg.det(self.M) - 1.0)))


@dataclass
class ConnectionForms:
    """Values of omega^1_2 and omega^3_j on (e1, e2)."""

    omega12: np.ndarray  # [..., k] = omega^1_2(e_k)
    omega3: np.ndarray  # [..., j, k] = omega^3_j(e_k)

    def symmetry_defect(self) -> np.ndarray:
        """Coefficient of omega^1 ^ omega^2 in omega^3_1 ^ omega^1 + omega^3_2 ^ omega^2."""
        return -self.omega3[..., 0, 1] + self.omega3[..., 1, 0]


@dataclass
class ThetaField:
    """Theta = Omega + L(M) stored through its values on e1 and e2."""

    theta: np.ndarray  # [..., k, 3, 3] = Theta(e_k)
    geometry: IntrinsicGeometry
    eps: np.ndarray

    def on_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Theta(d/du), Theta(d/dv)."""
        W = self.geometry.W
        tu = W[..., 0, 0, None, None] * self.theta[..., 0, :, :] + W[..., 1, 0, None, None] * self.theta[..., 1, :, :]
        tv = W[..., 0, 1, None, None] * self.theta[..., 0, :, :] + W[..., 1, 1, None, None] * self.theta[..., 1, :, :]
        return tu, tv

    def symmetry_defect(self) -> float:
        E = np.diag(self.eps)
        A = self.theta
        return float(np.max(np.abs(E @ A + np.swapaxes(E @ A, -1, -2))))


@dataclass
class IntegrabilityReport:
    darboux: np.ndarray
    darboux_max: float
    path_gap: float = 0.0
    flags: List[str] = field(default_factory=list)


@dataclass
class Reconstruction:
    """Output of a reconstruction: positions on the grid plus diagnostics."""

    model: object
    u: np.ndarray
    v: np.ndarray
    positions: np.ndarray
    M: np.ndarray
    diagnostics: Dict[str, object]

    def to_grid_surface(self) -> GridSurface:
        return GridSurface.from_points(self.model, self.u, self.v, self.positions)


# ---------------------------------------------------------------------------
# M from the tangent projections
# ---------------------------------------------------------------------------

def angles_from_T(T, eps, eh) -> np.ndarray:
    """eps_i nu_i = <J T_j, T_l> for cyclic (i, j, l)."""
    eps = np.asarray(eps, float)
    nu = np.empty(T.shape[:-2] + (3,))
    for i in range(3):
        j, l = (i + 1) % 3, (i + 2) % 3
        nu[..., i] = eps[i] * tangent_inner(eh, apply_j(eh, T[..., j, :]), T[..., l, :])
    return nu


def build_M_from_T(T, eps, eh, tol: float = 1e-6) -> Tuple[FrameField, np.ndarray]:
    """Change-of-frame matrices and angle functions from the tangent projections.

    ``T[..., i, a]`` are frame components of T_i.  Raises HypothesisError if
    the columns fail to be orthonormal by more than ``tol``.
    """
    eps = np.asarray(eps, float)
    ehv = np.asarray(eh[:2], float)
    M = np.empty(T.shape[:-2] + (3, 3))
    M[..., :, :2] = eps[:, None] * ehv * T  # eps_a <T_a, e_b>
    nu = angles_from_T(T, eps, eh)
    M[..., :, 2] = eps * nu
    gram = np.einsum("...ai,...aj->...ij", eps[:, None] * M[..., :, :2], M[..., :, :2])
    err = np.abs(gram - np.diag(ehv))
    worst = float(np.max(err)) if err.size else 0.0
    if not np.isfinite(worst) or worst > tol:
        idx = np.unravel_index(int(np.nanargmax(err.reshape(err.shape[:-2] + (4,)).max(-1))), err.shape[:-2])
        raise HypothesisError(
            f"tangent projections are not orthonormal columns (defect {worst:.3g} at grid index {[int(i) for i in idx]})",
            condition="orthonormality of the tangent projections")
    return FrameField(M, eps), nu


# ---------------------------------------------------------------------------
# Theta = Omega + L(M)
# ---------------------------------------------------------------------------

def connection_forms(S, geometry: IntrinsicGeometry) -> ConnectionForms:
    eh = geometry.eh
    omega3 = np.empty(S.shape)
    for j in range(2):
        omega3[..., j, :] = eh[2] * eh[j] * S[..., j, :]
    return ConnectionForms(geometry.omega12(), omega3)


def omega_matrix(S, geometry: IntrinsicGeometry) -> np.ndarray:
    """Omega(e_k) as [..., k, 3, 3] for the frame (e1, e2, N)."""
    eh = geometry.eh
    cf = connection_forms(S, geometry)
    Om = np.zeros(S.shape[:-2] + (2, 3, 3))
    for k in range(2):
        w = cf.omega12[..., k]
        Om[..., k, 0, 1] = w
        Om[..., k, 1, 0] = -eh[0] * eh[1] * w
        for j in range(2):
            Om[..., k, j, 2] = -S[..., j, k]
            Om[..., k, 2, j] = cf.omega3[..., j, k]
    return Om


def l_from_q(Q, eps) -> np.ndarray:
    """L(M)(e_k) from Q[..., b, k] = sum_g eps_g mu_g M^g_b M^g_k; returns [..., k, 3, 3]."""
    e1, e2, e3 = (float(x) for x in eps)
    L = np.zeros(Q.shape[:-2] + (2, 3, 3))
    for k in range(2):
        v1, v2, v3 = Q[..., 0, k], Q[..., 1, k], Q[..., 2, k]
        L[..., k, 0, 1] = e1 * e3 * v3
        L[..., k, 0, 2] = -e1 * e2 * v2
        L[..., k, 1, 0] = -e2 * e3 * v3
        L[..., k, 1, 2] = e1 * e2 * v1
        L[..., k, 2, 0] = e2 * e3 * v2
        L[..., k, 2, 1] = -e1 * e3 * v1
    return L


def l_matrix(M, eps, mu) -> np.ndarray:
    """L(M) for the (relabeled) structure with eps = surface signs."""
    eps = np.asarray(eps, float)
    mu = np.asarray(mu, float)
    Q = np.einsum("...gb,g,...gk->...bk", M, eps * mu, M[..., :, :2])
    return l_from_q(Q, eps)


def l_matrix_christoffel(M, eps, mu) -> np.ndarray:
    """L(M) summed directly from the ambient Christoffel symbols (independent route)."""

    class _S:
        pass

    s = _S()
    s.eps = tuple(float(x) for x in eps)
    s.mu = tuple(float(x) for x in mu)
    G = connection_table(s)  # G[g, d, z] = Gamma^z_{g d}
    eps = np.asarray(eps, float)
    L = np.einsum("a,z,...za,...gi,...db,gdz->...iab", -eps, eps, M, M[..., :, :2], M, G)
    return L


def l_matrix_dim4(row, eps, mu0: float, muk: float, epsk: float) -> np.ndarray:
    """L(M) in a space with four-dimensional isometry group from the Killing row of M.

    With mu equal to ``mu0`` off the Killing index, Q = mu0 E + (muk - mu0) eps_k r r^t.
    """
    eps = np.asarray(eps, float)
    Q = (mu0 * np.diag(eps)[:, :2] + (muk - mu0) * epsk * row[..., :, None] * row[..., None, :2])
    return l_from_q(Q, eps)


def case_a_l(c, eps, T3, nu3) -> np.ndarray:
    """Literal Case A matrix (Killing index 3) as [..., k, 3, 3]."""
    c1, _, c3 = c
    e1, e2, e3 = eps
    t1, t2 = e1 * T3[..., 0], e2 * T3[..., 1]  # T^i = <T3, e_i>
    A = np.zeros(nu3.shape + (3, 3))
    A[..., 0, 1] = e2 * nu3
    A[..., 0, 2] = -e3 * t2
    A[..., 1, 0] = -e1 * nu3
    A[..., 1, 2] = e3 * t1
    A[..., 2, 0] = e1 * t2
    A[..., 2, 1] = -e2 * t1
    A *= (e1 * c1 - e3 * c3) * e1 * e2
    L = np.empty(nu3.shape + (2, 3, 3))
    L[..., 0, :, :] = A * t1[..., None, None]
    L[..., 1, :, :] = A * t2[..., None, None]
    half = 0.5 * e3 * c3
    L[..., 0, 1, 2] += half * e2
    L[..., 0, 2, 1] += -half * e3
    L[..., 1, 0, 2] += -half * e1
    L[..., 1, 2, 0] += half * e3
    return L


def case_b_l(c, eps, T2, nu2) -> np.ndarray:
    """Literal Case B matrix (Killing index 2) as [..., k, 3, 3]."""
    c1, c2, _ = c
    e1, e2, e3 = eps
    # second row of M
    m1 = e2 * e1 * T2[..., 0]
    m2 = e2 * e2 * T2[..., 1]
    m3 = e2 * nu2
    A = np.zeros(nu2.shape + (3, 3))
    A[..., 0, 1] = e2 * m3
    A[..., 0, 2] = -e3 * m2
    A[..., 1, 0] = -e1 * m3
    A[..., 1, 2] = e3 * m1
    A[..., 2, 0] = e1 * m2
    A[..., 2, 1] = -e2 * m1
    A *= (e1 * c1 - e2 * c2) * e1 * e3
    L = np.empty(nu2.shape + (2, 3, 3))
    L[..., 0, :, :] = A * m1[..., None, None]  # eta^2(e_k) = M^2_k
    L[..., 1, :, :] = A * m2[..., None, None]
    half = 0.5 * e2 * c2
    L[..., 0, 1, 2] += half * e2
    L[..., 0, 2, 1] += -half * e3
    L[..., 1, 0, 2] += -half * e1
    L[..., 1, 2, 0] += half * e3
    return L


def theta_field(S, geometry: IntrinsicGeometry, M_relabeled, lab: Labeling,
                sym_tol: float = 1e-6) -> ThetaField:
    """Theta = Omega + L(M) with M already in the surface-adapted labeling."""
    eh = geometry.eh
    asym = np.abs(S[..., 0, 1] - eh[0] * eh[1] * S[..., 1, 0])
    if np.max(asym) > sym_tol:
        raise HypothesisError(f"shape operator is not self-adjoint (defect {np.max(asym):.3g})",
                              condition="self-adjointness of S")
    th = omega_matrix(S, geometry) + l_matrix(M_relabeled, lab.eps, lab.mu)
    return ThetaField(th, geometry, lab.eps)


def darboux_residual(theta: ThetaField, margin: int = 2) -> IntegrabilityReport:
    """|d Theta + [Theta, Theta]/2| evaluated on (e1, e2) at every grid point."""
    geo = theta.geometry
    T1 = theta.theta[..., 0, :, :]
    T2 = theta.theta[..., 1, :, :]
    d2 = geo.e_deriv(T2)[..., 0]  # e1(Theta(e2))
    d1 = geo.e_deriv(T1)[..., 1]  # e2(Theta(e1))
    br = geo.bracket12()
    R = d2 - d1 - (br[..., 0, None, None] * T1 + br[..., 1, None, None] * T2) + T1 @ T2 - T2 @ T1
    res = np.sqrt(np.sum(R * R, axis=(-1, -2)))
    inner = res[margin:res.shape[0] - margin, margin:res.shape[1] - margin] if margin else res
    return IntegrabilityReport(res, float(np.max(inner)) if inner.size else 0.0)


# ---------------------------------------------------------------------------
# integrators
# ---------------------------------------------------------------------------

def _check_group(M0, eps, tol=1e-8):
    E = np.diag(np.asarray(eps, float))
    if (np.max(np.abs(M0.T @ E @ M0 - E)) > tol or abs(np.linalg.det(M0) - 1.0) > tol):
        raise HypothesisError("initial frame is not in the group SO_3^eps", condition="initial frame")


def _frame_line(M0, A_nodes, h, eps):
    """Integrate M' = M A along one grid line with midpoint exponential steps."""
    n = A_nodes.shape[0]
    out = np.empty((n,) + np.shape(M0))
    out[0] = M0
    mids = cubic_midpoints(A_nodes, axis=0) if n > 1 else A_nodes
    for k in range(n - 1):
        out[k + 1] = eps_gram_schmidt(out[k] @ expm_so_eps(mids[k] * h), eps)
    return out


def integrate_frame(theta: ThetaField, M0, sweep: str = "row_first") -> FrameField:
    """Solve M^-1 dM = Theta with M(grid[0, 0]) = M0.

    ``sweep="row_first"`` integrates along v = v0 and then up every column;
    ``"column_first"`` uses the transposed comb.
    """
    eps = theta.eps
    M0 = np.asarray(M0, float)
    _check_group(M0, eps)
    tu, tv = theta.on_coordinates()
    geo = theta.geometry
    nu_, nv_ = tu.shape[:2]
    M = np.empty((nu_, nv_, 3, 3))
    if sweep == "row_first":
        M[:, 0] = _frame_line(M0, tu[:, 0], geo.hu, eps)
        Mcol = _frame_line(M[:, 0], np.swapaxes(tv, 0, 1), geo.hv, eps)
        M[:] = np.swapaxes(Mcol, 0, 1)
    elif sweep == "column_first":
        M[0, :] = _frame_line(M0, tv[0, :], geo.hv, eps)
        M[:] = _frame_line(M[0, :], tu, geo.hu, eps)
    else:
        raise ValueError(f"unknown sweep {sweep!r}")
    return FrameField(M, np.asarray(eps, float))


def _rk4_line(model, p0, V_nodes, h):
    """phi' = B(phi) V(t) along one grid line, classical fourth-order steps."""
    n = V_nodes.shape[0]
    out = np.empty((n,) + np.shape(p0))
    out[0] = p0
    mids = cubic_midpoints(V_nodes, axis=0)
    mv = lambda p, v: np.einsum("...ij,...j->...i", model.frame_matrix(p), v)
    for k in range(n - 1):
        p = out[k]
        k1 = mv(p, V_nodes[k])
        k2 = mv(p + 0.5 * h * k1, mids[k])
        k3 = mv(p + 0.5 * h * k2, mids[k])
        k4 = mv(p + h * k3, V_nodes[k + 1])
        out[k + 1] = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out[k + 1])):
            raise IntegrationError(f"position integration blew up after step {k}")
    return out


def integrate_position(model, frame: FrameField, geometry: IntrinsicGeometry, q0,
                       sweep: str = "row_first") -> np.ndarray:
    """Solve d(phi) = B(phi) M omega with phi(grid[0, 0]) = q0 (M in the original labeling)."""
    W = geometry.W
    M = frame.M
    Vu = np.einsum("...ab,...b->...a", M[..., :, :2], W[..., :, 0])
    Vv = np.einsum("...ab,...b->...a", M[..., :, :2], W[..., :, 1])
    q0 = np.asarray(q0, float)
    nu_, nv_ = Vu.shape[:2]
    P = np.empty((nu_, nv_, 3))
    try:
        if sweep == "row_first":
            P[:, 0] = _rk4_line(model, q0, Vu[:, 0], geometry.hu)
            P[:] = np.swapaxes(_rk4_line(model, P[:, 0], np.swapaxes(Vv, 0, 1), geometry.hv), 0, 1)
        elif sweep == "column_first":
            P[0, :] = _rk4_line(model, q0, Vv[0, :], geometry.hv)
            P[:] = _rk4_line(model, P[0, :], Vu, geometry.hu)
        else:
            raise ValueError(f"unknown sweep {sweep!r}")
    except ModelDomainError as exc:
        raise IntegrationError(f"integration left the model domain: {exc}") from exc
    return P


# ---------------------------------------------------------------------------
# routes
# ---------------------------------------------------------------------------

def _residual_tol(geometry: IntrinsicGeometry, factor: float = 100.0) -> float:
    h = max(geometry.hu, geometry.hv)
    return factor * h * h


def reconstruct_from_T(model, geometry: IntrinsicGeometry, T, q0, *, tol: Optional[float] = None,
                       check: bool = True) -> Reconstruction:
    """Immersion with prescribed tangent projections T_i on the surface (u, v, frame).

    The shape operator is the unique candidate built from T_i and the
    gradients of nu_i; the derivative equations for T_i are checked before
    integrating.
    """
    eh = geometry.eh
    eps = np.asarray(model.eps, float)
    frame, nu = build_M_from_T(T, eps, eh)
    probe = FundamentalData(model, geometry.u, geometry.v, eh, np.zeros(nu.shape[:-1] + (2, 2)),
                            T, nu, np.zeros(nu.shape[:-1]), geometry.K, frame.M, geometry.F, None, geometry)
    S, defect, asym = shape_from_T_nu(probe)
    S = 0.5 * (S + np.stack([np.stack([S[..., 0, 0], eh[0] * eh[1] * S[..., 1, 0]], -1),
                             np.stack([eh[0] * eh[1] * S[..., 0, 1], S[..., 1, 1]], -1)], -2))
    data = probe.replace(S=S, H=mean_curvature(S, eh))
    tol = _residual_tol(geometry) if tol is None else tol
    rep = compatibility_residuals(data)
    checks = {k: rep.max(k) for k in ("dT1", "dT2", "dT3")}
    m = 2
    checks["symmetry"] = float(np.max(np.abs(defect[m:-m, m:-m])))
    diag: Dict[str, object] = {"residuals": checks, "tolerance": tol}
    if check:
        bad = {k: v for k, v in checks.items() if not (v <= tol)}
        if bad:
            name = ", ".join(f"{k}={v:.3g}" for k, v in bad.items())
            raise HypothesisError(f"derivative equations for the tangent projections fail: {name} (tolerance {tol:.3g})",
                                  condition="derivative equations of T_i", report=checks)
    lab = surface_labeling(model, eh)
    Mr = lab.take(frame.M, axis=-2)
    th = ThetaField(omega_matrix(S, geometry) + l_matrix(Mr, lab.eps, lab.mu), geometry, lab.eps)
    drep = darboux_residual(th)
    P = integrate_position(model, frame, geometry, q0)
    P2 = integrate_position(model, frame, geometry, q0, sweep="column_first")
    diag.update(darboux=drep.darboux_max, path_gap=float(np.max(np.abs(P - P2))),
                group_defect=frame.group_defect(), det_defect=frame.det_defect(), S=S, nu=nu)
    return Reconstruction(model, geometry.u, geometry.v, P, frame.M, diag)


def tangent_from_angles(model, geometry: IntrinsicGeometry, nu, H_sign=1.0, psi_tol: float = 1e-8):
    """Solve T_alpha from the angle functions and a choice of sign (or grid) for H.

    Returns (T, H, psi, zeta) with T in the original labeling.
    """
    eh = geometry.eh
    lab = surface_labeling(model, eh)
    nu_l = lab.take(nu)
    g = angle_gradients(geometry, nu_l)
    X = x_fields(nu_l, g, lab.eps, eh)
    psi = psi_from_x(X, nu_l, lab.eps, eh)
    zeta = np.sum(lab.c * nu_l ** 2, axis=-1)
    if np.min(np.abs(psi)) <= psi_tol:
        raise HypothesisError(
            "psi vanishes: the angle functions are constant along the surface (constant-angle case, "
            "the surface lies in a left coset of a two-dimensional subgroup and is not determined by its angles)",
            condition="constant-angle case (psi = 0)")
    e12 = eh[0] * eh[1]
    disc = e12 * (psi - zeta ** 2)
    if np.ndim(H_sign) == 0:
        if np.min(disc) < -1e-8 * max(1.0, float(np.max(np.abs(psi)))):
            raise HypothesisError("psi - zeta^2 has the wrong sign for this causal character",
                                  condition="sign of psi - zeta^2")
        H = float(np.sign(H_sign) or 1.0) * 0.5 * np.sqrt(np.maximum(disc, 0.0))
    else:
        H = np.asarray(H_sign, float)
    if e12 < 0 and np.min(np.abs(4 * H ** 2 - zeta ** 2)) <= psi_tol:
        raise HypothesisError("the fields X_alpha are lightlike (4H^2 = zeta^2 on a timelike surface)",
                              condition="lightlike X case")
    JX = np.stack([apply_j(eh, X[..., i, :]) for i in range(3)], axis=-2)
    e123 = float(np.prod(lab.eps))
    T_l = (e123 * zeta / psi)[..., None, None] * X + (2 * H * lab.eps[2] / psi)[..., None, None] * JX
    return lab.put_back(T_l, axis=-2), H, psi, zeta


def reconstruct_from_angles(model, geometry: IntrinsicGeometry, nu, q0, H_sign=1.0, *,
                            tol: Optional[float] = None, quadric_tol: float = 1e-6) -> Reconstruction:
    """Immersion with prescribed angle functions; ``H_sign`` picks the branch (or is an H grid)."""
    eps = np.asarray(model.eps, float)
    quad = np.max(np.abs(np.sum(eps * nu ** 2, -1) - geometry.eh[2]))
    if quad > quadric_tol:
        raise HypothesisError(f"angle functions leave the quadric sum eps_a nu_a^2 = eh3 (defect {quad:.3g})",
                              condition="angle quadric")
    T, H, psi, zeta = tangent_from_angles(model, geometry, nu, H_sign)
    rec = reconstruct_from_T(model, geometry, T, q0, tol=tol)
    rec.diagnostics.update(H=H, psi=psi, zeta=zeta, T=T)
    return rec


def complete_from_row(row, k: int, eps) -> np.ndarray:
    """A matrix of SO_3^eps whose k-th row is ``row`` (rows orthonormal for diag(eps))."""
    eps = np.asarray(eps, float)
    row = np.asarray(row, float)
    others = [i for i in range(3) if i != k]
    I3 = np.eye(3)
    cand = [I3[j] for j in range(3)] + [I3[i] + s * I3[j] for i in range(3) for j in range(i + 1, 3) for s in (1, -1)]
    basis = [row]
    for v in cand:
        w = v.copy()
        for b, s in zip(basis, [eps[k]] + [eps[o] for o in others]):
            w = w - np.sum(eps * w * b) * s * b
        nrm = np.sum(eps * w * w)
        if abs(nrm) > 1e-6 and len(basis) < 3:
            want = eps[others[len(basis) - 1]]
            if np.sign(nrm) == np.sign(want):
                basis.append(w / np.sqrt(abs(nrm)))
    if len(basis) < 3:
        raise HypothesisError("cannot complete the Killing row to a frame", condition="initial frame")
    R = np.zeros((3, 3))
    R[k] = basis[0]
    R[others[0]] = basis[1]
    R[others[1]] = basis[2]
    if np.linalg.det(R) < 0:
        R[others[1]] *= -1
    return R


def reconstruct_dim4(model, geometry: IntrinsicGeometry, S, Tk, nuk, q0, M0=None, *,
                     tol: Optional[float] = None, check: bool = True) -> Reconstruction:
    """Immersion into E(k,t), L(k,t) or L^(k,t) from the shape operator and the Killing data.

    ``Tk``, ``nuk`` are the tangent projection and angle function of the
    Killing field E_k.  ``M0`` (original labeling) fixes the initial frame;
    by default one is completed from the Killing row.
    """
    fam = getattr(model, "family", None)
    if fam is None or getattr(model, "product_limit", False):
        raise HypothesisError("model is not a Lie group with four-dimensional isometry group",
                              condition="dimension-four family")
    eh = geometry.eh
    k = fam.killing_index
    nT = np.zeros(nuk.shape + (3, 2))
    nT[..., k, :] = Tk
    nn = np.zeros(nuk.shape + (3,))
    nn[..., k] = nuk
    data = FundamentalData(model, geometry.u, geometry.v, eh, S, nT, nn, mean_curvature(S, eh),
                           geometry.K, None, geometry.F, None, geometry)
    tol = _residual_tol(geometry) if tol is None else tol
    rep = dim4_residuals(data)
    checks = {name: rep.max(name) for name in rep.fields}
    names = {"gauss": "Gauss equation (i*)", "codazzi": "Codazzi equation (ii*)",
             "algebraic": "norm of the Killing projection (iii*)", "dT": "derivative of T_k (iv*)",
             "dnu": "gradient of nu_k (v*)"}
    if check:
        bad = [k_ for k_, v in checks.items() if not (v <= tol)]
        if bad:
            msg = "; ".join(f"{names[b]} residual {checks[b]:.3g}" for b in bad)
            raise HypothesisError(f"dimension-four conditions fail: {msg} (tolerance {tol:.3g})",
                                  condition=names[bad[0]], report=checks)
    eps = np.asarray(model.eps, float)
    lab = surface_labeling(model, eh)
    kr = lab.perm.index(k)
    row = np.concatenate([eps[k] * np.asarray(eh[:2]) * Tk, (eps[k] * nuk)[..., None]], -1)
    pr = dim4_params(model)
    mu_l = lab.mu
    mu0 = mu_l[(kr + 1) % 3]
    Lm = l_matrix_dim4(row, lab.eps, mu0, mu_l[kr], lab.eps[kr])
    th = ThetaField(omega_matrix(S, geometry) + Lm, geometry, lab.eps)
    drep = darboux_residual(th)
    if M0 is None:
        M0 = complete_from_row(row[0, 0], k, eps)
    M0 = np.asarray(M0, float)
    if np.max(np.abs(M0[k] - row[0, 0])) > 1e-6:
        raise HypothesisError("initial frame does not match the Killing data at the base point",
                              condition="initial frame")
    Mr0 = lab.take(M0, axis=0)
    Fr = integrate_frame(th, Mr0)
    Fr2 = integrate_frame(th, Mr0, sweep="column_first")
    M = lab.put_back(Fr.M, axis=-2)
    frame = FrameField(M, eps)
    P = integrate_position(model, frame, geometry, q0)
    diag = {"residuals": checks, "tolerance": tol, "darboux": drep.darboux_max,
            "frame_path_gap": float(np.max(np.abs(Fr.M - Fr2.M))),
            "group_defect": frame.group_defect(), "killing_row_error": float(np.max(np.abs(M[..., k, :] - row))),
            "params": pr}
    return Reconstruction(model, geometry.u, geometry.v, P, M, diag)


def relabeled_theta(data: FundamentalData) -> Tuple[ThetaField, Labeling]:
    """Theta built from extracted data (convenience for diagnostics and tests)."""
    lab = surface_labeling(data.model, data.eh)
    Mr = lab.take(data.M, axis=-2)
    return theta_field(data.S, data.geometry, Mr, lab), lab
