"""Explicit surface families.

Constant-angle surfaces (left cosets of two-dimensional subgroups), the
totally geodesic ones among them, vertical cylinders in E(kappa,tau) with
their angular companions, and a handful of analytic charts used as test
surfaces throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .model_core import Family, ModelDomainError
from .surface_geometry import SurfacePatch

SOLVE_TOL = 1e-12


class SpecialSurfaceError(ValueError):
    """Parameters outside the range where the requested surface exists."""


class FlowDomainError(ModelDomainError):
    """A flow line left the coordinate domain of the model."""


# ---------------------------------------------------------------------------
# constant angle surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantAngleSolutionSet:
    """Angle triples with sum eps_a nu_a^2 = eh3 and sum c_a nu_a^2 = 0.

    In the squared unknowns x_a = nu_a^2 both constraints are linear, so the
    solutions form the part of a line lying in the closed positive octant:
    a segment ``x_start + t (x_end - x_start)``, t in [0, 1], that may
    collapse to a point.  Each x lifts to the nu with |nu_a| = sqrt(x_a),
    so the set in nu-space is a finite union of conic arcs (or points).

    ``kind`` is "empty", "points", "curves" or "all" (flat model, c = 0,
    where every unit normal satisfies both constraints).
    """

    kind: str
    eh3: float
    eps: Tuple[int, int, int]
    c: Tuple[float, float, float]
    x_start: Optional[np.ndarray] = None
    x_end: Optional[np.ndarray] = None
    unbounded: bool = False

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def squared_angles(self, t) -> np.ndarray:
        if self.kind not in ("points", "curves"):
            raise ValueError(f"no parametrization for a solution set of kind {self.kind!r}")
        t = np.asarray(t, float)[..., None]
        x = self.x_start + t * (self.x_end - self.x_start)
        return np.clip(x, 0.0, None)

    def sample(self, n: int = 16) -> np.ndarray:
        """Points of the set, with every sign choice; shape (m, 3).

        For an unbounded set the segment stops at ``x_end``, which was
        chosen at a finite cut-off.
        """
        if self.kind == "empty":
            return np.zeros((0, 3))
        if self.kind == "all":
            raise ValueError("every unit normal is a solution; sample the unit sphere directly")
        ts = np.linspace(0.0, 1.0, n) if self.kind == "curves" else np.zeros(1)
        mags = np.sqrt(self.squared_angles(ts))
        signs = np.array([[s0, s1, s2] for s0 in (1, -1) for s1 in (1, -1) for s2 in (1, -1)], float)
        pts = (mags[:, None, :] * signs[None]).reshape(-1, 3)
        # drop duplicates created by zero components
        return np.unique(np.round(pts, 14), axis=0) + 0.0

    def contains(self, nu, tol: float = 1e-10) -> bool:
        nu = np.asarray(nu, float)
        eps = np.array(self.eps, float)
        c = np.array(self.c, float)
        sphere = abs(float(np.sum(eps * nu ** 2)) - self.eh3) <= tol
        if self.kind == "all":
            return sphere
        return sphere and abs(float(np.sum(c * nu ** 2))) <= tol


def constant_angle_set(model, eh3: float = 1.0, cutoff: float = 10.0) -> ConstantAngleSolutionSet:
    """Solve the two quadric constraints on constant angle functions.

    ``eh3`` is the sign of the unit normal.  When the solution line leaves
    the octant through infinity (possible only for indefinite signs) it is
    cut where the largest squared angle reaches ``cutoff``.
    """
    eps = np.array(model.eps, float)
    c = np.array(model.c, float)
    eh3 = float(np.sign(eh3))
    base = dict(eh3=eh3, eps=tuple(int(e) for e in eps), c=tuple(float(x) for x in c))
    A = np.vstack([eps, c])
    b = np.array([eh3, 0.0])
    if np.linalg.matrix_rank(A, tol=SOLVE_TOL) < 2:
        if np.allclose(c, 0.0, atol=SOLVE_TOL):
            return ConstantAngleSolutionSet("all", **base)
        # c proportional to eps: sum c x = lambda eh3 != 0
        return ConstantAngleSolutionSet("empty", **base)
    x0 = np.linalg.lstsq(A, b, rcond=None)[0]
    d = np.cross(eps, c)
    d = d / np.linalg.norm(d)
    lo, hi = -np.inf, np.inf
    for x0i, di in zip(x0, d):
        if abs(di) < SOLVE_TOL:
            if x0i < -SOLVE_TOL:
                return ConstantAngleSolutionSet("empty", **base)
            continue
        t = -x0i / di
        if di > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
    if lo > hi + SOLVE_TOL:
        return ConstantAngleSolutionSet("empty", **base)
    unbounded = not (np.isfinite(lo) and np.isfinite(hi))
    if unbounded:
        # move along the ray until some squared angle reaches the cut-off
        if np.isfinite(lo):
            start, direction = lo, 1.0
        else:
            start, direction = hi, -1.0
        grow = np.max(direction * d)
        lo, hi = sorted((start, start + direction * cutoff / max(grow, SOLVE_TOL)))
    xs = np.clip(x0 + lo * d, 0.0, None)
    xe = np.clip(x0 + hi * d, 0.0, None)
    # the octant boundary is hit exactly; clear round-off there
    xs[xs < 1e-14] = 0.0
    xe[xe < 1e-14] = 0.0
    kind = "points" if np.allclose(xs, xe, atol=1e-14) else "curves"
    return ConstantAngleSolutionSet(kind, x_start=xs, x_end=xe, unbounded=unbounded, **base)


# ---------------------------------------------------------------------------
# totally geodesic surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TotallyGeodesicDistribution:
    """Left-invariant plane field span{Y1, Y2} (frame components) and its constant angles."""

    Y1: np.ndarray
    Y2: np.ndarray
    nu: np.ndarray


@dataclass(frozen=True)
class TotallyGeodesicResult:
    """``kind`` is "constant_curvature", "distributions" or "empty"."""

    kind: str
    distributions: List[TotallyGeodesicDistribution] = field(default_factory=list)
    zero_index: Optional[int] = None

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"


def totally_geodesic(model, tol: float = 1e-12) -> TotallyGeodesicResult:
    """Totally geodesic surfaces of a model without constant sectional curvature.

    They exist exactly when some mu_k vanishes (eps_k c_k = eps_i c_i + eps_j c_j)
    and, ordering the other two indices so that eps_i c_j - eps_j c_i > 0,
    c_j > 0 > c_i.  They are then integral surfaces of
    span{sqrt(-c_i) E_i +- sqrt(c_j) E_j, E_k}.
    """
    if getattr(model, "iso_dim", None) == 6:
        return TotallyGeodesicResult("constant_curvature")
    c = np.array(model.c, float)
    eps = np.array(model.eps, float)
    mu = np.array(model.mu, float)
    for k in range(3):
        if abs(mu[k]) > tol:
            continue
        i, j = [m for m in range(3) if m != k]
        D = eps[i] * c[j] - eps[j] * c[i]
        if D < 0:
            i, j = j, i
            D = -D
        if D <= tol:
            continue
        x_i, x_j = c[j] / D, -c[i] / D
        if x_i <= tol or x_j <= tol:
            continue
        dists = []
        for s in (1.0, -1.0):
            Y1 = np.zeros(3)
            Y1[i] = np.sqrt(-c[i])
            Y1[j] = s * np.sqrt(c[j])
            Y2 = np.zeros(3)
            Y2[k] = 1.0
            nu = np.zeros(3)
            nu[i] = np.sqrt(x_i)
            nu[j] = -s * np.sqrt(x_j)
            dists.append(TotallyGeodesicDistribution(Y1, Y2, nu))
        return TotallyGeodesicResult("distributions", dists, zero_index=k)
    return TotallyGeodesicResult("empty")


# ---------------------------------------------------------------------------
# integral surfaces of left-invariant distributions
# ---------------------------------------------------------------------------

def spanning_fields(nu) -> Tuple[np.ndarray, np.ndarray]:
    """Left-invariant fields spanning the plane orthogonal to the normal with angles ``nu``."""
    n1, n2, n3 = np.asarray(nu, float)
    if abs(n3) > SOLVE_TOL:
        return np.array([n3, 0.0, -n1]), np.array([0.0, n3, -n2])
    return np.array([n2, -n1, 0.0]), np.array([0.0, 0.0, 1.0])


def _flow(model, a: np.ndarray, p: np.ndarray, t: np.ndarray, n_steps: int) -> np.ndarray:
    """Follow the left-invariant field with frame components ``a`` for time ``t`` (RK4)."""
    h = (np.asarray(t, float) / n_steps)[..., None]
    p = np.array(p, float)

    def f(q):
        B = model.frame_matrix(q)
        return B[..., :, 0] * a[0] + B[..., :, 1] * a[1] + B[..., :, 2] * a[2]

    try:
        for _ in range(n_steps):
            k1 = f(p)
            k2 = f(p + 0.5 * h * k1)
            k3 = f(p + 0.5 * h * k2)
            k4 = f(p + h * k3)
            p = p + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    except ModelDomainError as exc:
        raise FlowDomainError(f"flow line left the model domain: {exc}") from exc
    return p


@dataclass
class IntegralSurfacePatch(SurfacePatch):
    """Chart q0 * exp(u Y1) * exp(v Y2) of a left coset, built by integrating flows."""

    nu: Optional[np.ndarray] = None
    Y1: Optional[np.ndarray] = None
    Y2: Optional[np.ndarray] = None
    commutativity_defect: float = 0.0


def integral_surface(model, nu, q0=(0.0, 0.0, 0.0), extent: float = 0.5, *,
                     max_step: float = 0.01, check: bool = True) -> IntegralSurfacePatch:
    """Surface with constant angles ``nu`` through ``q0`` as a flow-of-flow chart.

    The chart is (u, v) -> Phi^{Y2}_v(Phi^{Y1}_u(q0)) on [-extent, extent]^2.
    The step count is fixed from ``extent`` so the chart is a smooth
    function of (u, v) and can be differentiated numerically.
    ``commutativity_defect`` is the distance between the two orders of
    composing the flows at the corner (u, v) = (extent, extent); the
    fields need not commute even though the plane field is integrable.
    """
    nu = np.asarray(nu, float)
    eps = np.array(model.eps, float)
    q0 = np.asarray(q0, float)
    if check and not getattr(model, "product_limit", False):
        sol = constant_angle_set(model, float(np.sign(np.sum(eps * nu ** 2))))
        if not sol.contains(nu, tol=1e-9):
            raise SpecialSurfaceError(f"angles {nu.tolist()} do not satisfy the constant-angle constraints")
    try:
        model.frame_matrix(q0)
    except ModelDomainError as exc:
        raise SpecialSurfaceError(f"base point {q0.tolist()} lies outside the model domain") from exc
    Y1, Y2 = spanning_fields(nu)
    # the chart's first coordinate must be spacelike
    ip = lambda X, Y: float(np.sum(eps * X * Y))
    if ip(Y1, Y1) <= SOLVE_TOL:
        for cand in (Y2, Y1 + Y2, Y1 - Y2):
            if ip(cand, cand) > SOLVE_TOL:
                Y1, Y2 = cand, (Y1 if cand is Y2 else Y2)
                break
        else:
            raise SpecialSurfaceError("the plane orthogonal to these angles has no spacelike direction")
    n_steps = max(1, int(np.ceil(2.0 * extent / max_step)))

    def position(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        p = np.broadcast_to(q0, u.shape + (3,))
        p = _flow(model, Y1, p, u, n_steps)
        return _flow(model, Y2, p, v, n_steps)

    corner = np.array(extent)
    a = _flow(model, Y2, _flow(model, Y1, q0, corner, n_steps), corner, n_steps)
    b = _flow(model, Y1, _flow(model, Y2, q0, corner, n_steps), corner, n_steps)
    return IntegralSurfacePatch(model, position, (-extent, extent, -extent, extent),
                                nu=nu, Y1=Y1, Y2=Y2, commutativity_defect=float(np.linalg.norm(a - b)))


# ---------------------------------------------------------------------------
# vertical cylinders in E(kappa, tau)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerticalCylinder:
    patch: SurfacePatch
    H: float
    companion: SurfacePatch
    conformal_factor: float


def _ekt_params(model) -> Tuple[float, float]:
    if getattr(model, "product_limit", False):
        raise SpecialSurfaceError("vertical cylinders are built in E(kappa, tau) with tau != 0")
    fam = getattr(model, "family", None)
    if fam is not None and fam.family is Family.EKT:
        return float(fam.kappa), float(fam.tau)
    c1, c2, c3 = model.c
    # round spheres c1 = c2 = c3 are E(kappa, tau) with a larger isometry group
    if tuple(model.eps) == (1, 1, 1) and c1 == c2 and c3 != 0:
        return float(c1 * c3), float(c3 / 2.0)
    raise SpecialSurfaceError("vertical cylinders are built in E(kappa, tau) with tau != 0")


def _cylinder_chart(r, s, tau, orient, shift):
    """(orient*r cos w, r sin w, s(z + shift*tau*r*w)) as a function of (w, z), with partials."""

    def G(w, z):
        return np.stack([orient * r * np.cos(w), r * np.sin(w), s * (z + shift * tau * r * w)], axis=-1)

    def dG(w, z):
        zero = np.zeros_like(w)
        Gw = np.stack([-orient * r * np.sin(w), r * np.cos(w), zero + s * shift * tau * r], axis=-1)
        Gz = np.stack([zero, zero, zero + s], axis=-1)
        Gww = np.stack([-orient * r * np.cos(w), -r * np.sin(w), zero], axis=-1)
        return Gw, Gz, Gww

    return G, dG


def _linear_reparam(G, dG, A):
    """Compose a cylinder chart with the linear change (w, z) = A (u, v); the chart is linear in z."""
    (a11, a12), (a21, a22) = A

    def position(u, v):
        return G(a11 * u + a12 * v, a21 * u + a22 * v)

    def partials(u, v):
        w, z = a11 * u + a12 * v, a21 * u + a22 * v
        Gw, Gz, Gww = dG(w, z)
        Pu = a11 * Gw + a21 * Gz
        Pv = a12 * Gw + a22 * Gz
        return Pu, Pv, a11 * a11 * Gww, a11 * a12 * Gww, a12 * a12 * Gww

    return position, partials


def vertical_cylinder(model, r: float, domain=(0.0, 1.0, 0.0, 1.0)) -> VerticalCylinder:
    """Vertical cylinder of radius ``r`` around the fibre through the origin, and its companion.

    For kappa != 0 the chart is (r cos u, r sin u, 4r/(4+kappa r^2)(v + tau r u)),
    whose induced metric is (16 r^2/(4+kappa r^2)^2)(du^2 + dv^2).  The
    companion is the same cylinder reparametrised by a rotation of (u, v)
    that is an intrinsic but not an extrinsic isometry.  For kappa = 0 the
    unit-speed chart (x(u), y(u), v + tau z(u)) is used and the companion
    is (-x(u), -y(u), -v + tau z(u)).
    """
    kappa, tau = _ekt_params(model)
    r = float(r)
    if r <= 0 or not 4.0 + kappa * r * r > 0:
        raise SpecialSurfaceError(f"radius {r} needs r > 0 and 4 + kappa r^2 > 0 (kappa = {kappa})")
    H = (-4.0 + kappa * r * r) / (8.0 * r)
    if kappa == 0.0:
        pos, par = _nil_chart(r, tau, 1.0)
        cpos, cpar = _nil_chart(r, tau, -1.0)
        factor = 1.0
    else:
        s = 4.0 * r / (4.0 + kappa * r * r)
        G, dG = _cylinder_chart(r, s, tau, 1.0, 1.0)
        pos, par = _linear_reparam(G, dG, ((1.0, 0.0), (0.0, 1.0)))
        den = kappa ** 2 + 16.0 * H ** 2 * tau ** 2
        a = (kappa ** 2 - 16.0 * H ** 2 * tau ** 2) / den
        # 8 (not 16) keeps a^2 + b^2 = 1, as a rotation must
        b = 8.0 * H * kappa * tau / den
        Gc, dGc = _cylinder_chart(r, s, tau, -1.0, -1.0)
        cpos, cpar = _linear_reparam(Gc, dGc, ((a, -b), (b, a)))
        factor = s * s
    return VerticalCylinder(SurfacePatch(model, pos, tuple(domain), par), float(H),
                            SurfacePatch(model, cpos, tuple(domain), cpar), float(factor))


def _nil_chart(r, tau, sign):
    """(sign x(u), sign y(u), sign v + tau r u) for the unit-speed circle of radius r."""

    def position(u, v):
        w = u / r
        return np.stack([sign * r * np.cos(w), sign * r * np.sin(w), sign * v + tau * r * u], axis=-1)

    def partials(u, v):
        w = u / r
        zero = np.zeros_like(w)
        Pu = np.stack([-sign * np.sin(w), sign * np.cos(w), zero + tau * r], axis=-1)
        Pv = np.stack([zero, zero, zero + sign], axis=-1)
        Puu = np.stack([-sign * np.cos(w) / r, -sign * np.sin(w) / r, zero], axis=-1)
        Z = np.zeros_like(Pu)
        return Pu, Pv, Puu, Z, Z.copy()

    return position, partials


# ---------------------------------------------------------------------------
# analytic test surfaces
# ---------------------------------------------------------------------------

def round_sphere(model, radius: float = 1.0, domain=(0.2, 1.2, -0.5, 0.5)) -> SurfacePatch:
    """Euclidean sphere; u is the longitude and v minus the latitude, so N points inward and H = 1/radius."""
    R = float(radius)

    def position(u, v):
        return R * np.stack([np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), -np.sin(v)], axis=-1)

    def partials(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros_like(cu * cv)
        Pu = R * np.stack([-cv * su, cv * cu, z], axis=-1)
        Pv = R * np.stack([-sv * cu, -sv * su, -cv + z], axis=-1)
        Puu = R * np.stack([-cv * cu, -cv * su, z], axis=-1)
        Puv = R * np.stack([sv * su, -sv * cu, z], axis=-1)
        Pvv = R * np.stack([-cv * cu, -cv * su, sv + z], axis=-1)
        return Pu, Pv, Puu, Puv, Pvv

    return SurfacePatch(model, position, tuple(domain), partials)


def horizontal_plane(model, domain=(-0.3, 0.3, -0.3, 0.3)) -> SurfacePatch:
    """The chart (u, v, 0): a flat plane in R^3, a great sphere for c = (2,2,2)."""

    def position(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([u, v, np.zeros_like(u)], axis=-1)

    def partials(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        z = np.zeros_like(u)
        Pu = np.stack([z + 1.0, z, z], axis=-1)
        Pv = np.stack([z, z + 1.0, z], axis=-1)
        Z = np.zeros(u.shape + (3,))
        return Pu, Pv, Z, Z.copy(), Z.copy()

    return SurfacePatch(model, position, tuple(domain), partials)


def elliptic_cylinder(model, a: float, b: float, domain=(0.0, 1.0, 0.0, 1.0)) -> SurfacePatch:
    """Vertical cylinder (a cos u, b sin u, v) over an ellipse; not CMC when a != b."""

    def position(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([a * np.cos(u), b * np.sin(u), v], axis=-1)

    def partials(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        z = np.zeros_like(u)
        Pu = np.stack([-a * np.sin(u), b * np.cos(u), z], axis=-1)
        Pv = np.stack([z, z, z + 1.0], axis=-1)
        Puu = np.stack([-a * np.cos(u), -b * np.sin(u), z], axis=-1)
        Z = np.zeros(u.shape + (3,))
        return Pu, Pv, Puu, Z, Z.copy()

    return SurfacePatch(model, position, tuple(domain), partials)


def horocylinder(model, rho: float = 1.0, domain=(2.0, 3.5, 0.0, 1.0)) -> SurfacePatch:
    """Vertical cylinder over a horocycle of the disk model of curvature kappa < 0 (H = +-sqrt(-kappa)/2)."""
    kappa = float(getattr(model, "kappa", np.nan))
    if not kappa < 0:
        raise SpecialSurfaceError("horocylinders need a base of negative curvature")
    R = 2.0 / np.sqrt(-kappa)
    if not 0 < rho < R:
        raise SpecialSurfaceError(f"horocycle radius must lie in (0, {R})")
    cx = R - rho

    def position(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return np.stack([cx + rho * np.cos(u), rho * np.sin(u), v], axis=-1)

    def partials(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        z = np.zeros_like(u)
        Pu = np.stack([-rho * np.sin(u), rho * np.cos(u), z], axis=-1)
        Pv = np.stack([z, z, z + 1.0], axis=-1)
        Puu = np.stack([-rho * np.cos(u), -rho * np.sin(u), z], axis=-1)
        Z = np.zeros(u.shape + (3,))
        return Pu, Pv, Puu, Z, Z.copy()

    return SurfacePatch(model, position, tuple(domain), partials)
