"""Rotations of the traceless shape operator and the resulting isometric deformations.

For constant mean curvature surfaces in E(kappa,tau), L(kappa,tau) and
L^(kappa,tau) (and their tau = 0 product limits) rotating the traceless
part of S and the Killing projection T_k by a constant angle produces the
data of a CMC surface in another space of the same family.  In the round
three-sphere the same rotation applied to all three T_i yields the twin
immersion with opposite mean curvature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model_core import Family, make_dim4_model
from .surface_geometry import FundamentalData, interior, j_matrix, mean_curvature

CMC_TOL = 1e-6
TAU_SNAP = 1e-12
# round-off in kappa - 4 tau^2 would otherwise turn a Nil target into SU(2) or SL(2)
KAPPA_SNAP = 1e-9


class CorrespondenceError(ValueError):
    """Source data do not meet the hypotheses of the transform."""


def rotation_matrix(theta: float, eh) -> np.ndarray:
    """Matrix of cos(t) id + sin(t) J (cosh/sinh on Lorentzian surfaces) in the adapted frame."""
    J = j_matrix(eh)
    if eh[0] * eh[1] > 0:
        return np.cos(theta) * np.eye(2) + np.sin(theta) * J
    return np.cosh(theta) * np.eye(2) + np.sinh(theta) * J


def rot_theta(v, theta: float, eh) -> np.ndarray:
    """Apply the rotation of angle ``theta`` to tangent vectors given by frame components."""
    return np.einsum("ab,...b->...a", rotation_matrix(theta, eh), np.asarray(v, float))


def lawson_params(H: float, tau: float, theta: float, eps: float, lorentzian_surface: bool = False
                  ) -> Tuple[float, float]:
    """Target (H, tau) after rotating the traceless shape operator by ``theta``.

    ``eps`` is the sign relating H to the trace (the sign of the normal);
    ``lorentzian_surface`` selects the hyperbolic rotation.
    """
    if lorentzian_surface:
        eH = eps * H * np.cosh(theta) - tau * np.sinh(theta)
        t = -eps * H * np.sinh(theta) + tau * np.cosh(theta)
    else:
        eH = eps * H * np.cos(theta) + tau * np.sin(theta)
        t = -eps * H * np.sin(theta) + tau * np.cos(theta)
    return float(eps * eH), float(t)


@dataclass(frozen=True)
class CorrespondenceParams:
    theta: float
    family: Family
    source_kappa: float
    source_tau: float
    source_H: float
    eh3: float
    target_kappa: float
    target_tau: float
    target_H: float
    hyperbolic: bool

    @property
    def invariant(self) -> float:
        """kappa - 4 tau^2 (Riemannian family) or kappa + 4 tau^2 (Lorentzian families)."""
        s = -4.0 if self.family is Family.EKT else 4.0
        return self.source_kappa + s * self.source_tau ** 2


def _family_of(model) -> Tuple[Family, float, float]:
    if getattr(model, "product_limit", False):
        return model.family, float(model.kappa), 0.0
    fam = getattr(model, "family", None)
    if fam is None:
        raise CorrespondenceError("source model does not have a four-dimensional isometry group")
    return fam.family, float(fam.kappa), float(fam.tau)


def cmc_value(data: FundamentalData, tol: float = CMC_TOL) -> float:
    """The constant value of H, or CorrespondenceError if H varies more than ``tol`` (relative)."""
    H = interior(data.H)
    mean = float(np.mean(H))
    spread = float(np.std(H))
    scale = max(abs(mean), 1.0) if abs(mean) < 1e-3 else abs(mean)
    if spread / scale > tol:
        raise CorrespondenceError(f"mean curvature is not constant (relative spread {spread / scale:.3g})")
    return mean


def _rotate_shape(S, H, theta, eh, H_new):
    R = rotation_matrix(theta, eh)
    I = np.eye(2)
    tr0 = S - eh[2] * H * I
    return eh[2] * H_new * I + np.einsum("ab,...bc->...ac", R, tr0)


def daniel_transform(data: FundamentalData, theta: float
                     ) -> Tuple[FundamentalData, CorrespondenceParams]:
    """Rotate the fundamental data of a CMC surface by the phase angle ``theta``.

    Returns the transformed data (only the Killing components of T and nu
    are meaningful; the others are NaN) together with the source/target
    parameters.  The target model is built from the same family with the
    invariant kappa -/+ 4 tau^2 preserved.
    """
    model = data.model
    fam, kappa, tau = _family_of(model)
    eh = data.eh
    H = cmc_value(data)
    hyper = eh[0] * eh[1] < 0
    H_new, tau_new = lawson_params(H, tau, theta, eh[2], hyper)
    if abs(tau_new) < TAU_SNAP:
        tau_new = 0.0
    s = -4.0 if fam is Family.EKT else 4.0
    kappa_new = kappa + s * tau ** 2 - s * tau_new ** 2
    if abs(kappa_new) < KAPPA_SNAP * max(1.0, abs(kappa) + 4.0 * tau ** 2):
        kappa_new = 0.0
    target = make_dim4_model(fam, kappa_new, tau_new)
    k = model.killing_index if getattr(model, "product_limit", False) else model.family.killing_index
    k_new = target.killing_index if getattr(target, "product_limit", False) else target.family.killing_index
    R = rotation_matrix(theta, eh)
    S_new = _rotate_shape(data.S, H, theta, eh, H_new)
    T_new = np.full(data.T.shape, np.nan)
    T_new[..., k_new, :] = np.einsum("ab,...b->...a", R, data.T[..., k, :])
    nu_new = np.full(data.nu.shape, np.nan)
    nu_new[..., k_new] = data.nu[..., k]
    out = data.replace(model=target, S=S_new, T=T_new, nu=nu_new, H=mean_curvature(S_new, eh),
                       M=None, positions=None)
    params = CorrespondenceParams(float(theta), fam, kappa, tau, H, eh[2], kappa_new, tau_new, H_new, hyper)
    return out, params


def twin_angle(H: float) -> float:
    return float(-2.0 * np.arctan(H))


def twin_s3(data: FundamentalData) -> Tuple[FundamentalData, float]:
    """Twin immersion in the round sphere model c = (2,2,2): same angles, opposite H."""
    model = data.model
    c = np.asarray(getattr(model, "c", (np.nan,) * 3), float)
    if not (np.allclose(c, 2.0) and tuple(model.eps) == (1, 1, 1)):
        raise CorrespondenceError("twin immersions are defined in the model with c = (2,2,2)")
    H = cmc_value(data)
    # minimal surfaces get theta = 0 and are their own twins
    theta = twin_angle(H)
    R = rotation_matrix(theta, data.eh)
    S_new = _rotate_shape(data.S, H, theta, data.eh, -H)
    T_new = np.einsum("ab,...ib->...ia", R, data.T)
    out = data.replace(S=S_new, T=T_new, H=mean_curvature(S_new, data.eh), M=None, positions=None)
    return out, theta
