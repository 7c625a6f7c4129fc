"""Isometric correspondences: the Daniel-type rotation and twin surfaces in the sphere."""

import numpy as np

from metric_lie_surfaces.correspondences import daniel_transform, twin_s3
from metric_lie_surfaces.model_core import make_dim4_model, make_model
from metric_lie_surfaces.reconstruction import reconstruct_dim4, reconstruct_from_T
from metric_lie_surfaces.special_surfaces import horizontal_plane, vertical_cylinder
from metric_lie_surfaces.surface_geometry import dim4_residuals, extract_fundamental_data, interior


def main():
    # a CMC cylinder in E(-1,1) carried through its associate family
    m = make_dim4_model("EKT", -1, 1)
    d = extract_fundamental_data(vertical_cylinder(m, 1.0, (0, 0.5, 0, 0.5)).patch, 41, 41)
    print("E(-1,1) cylinder, H =", round(float(np.mean(d.H)), 6))
    for theta in (0.3, 0.8, 1.2):
        t, p = daniel_transform(d, theta)
        k = t.model.family.killing_index
        rec = reconstruct_dim4(t.model, t.geometry, t.S, t.T[..., k, :], t.nu[..., k], [0, 0, 0])
        e = extract_fundamental_data(rec.to_grid_surface())
        print(f"    theta={theta}: kappa={p.target_kappa:.6f} tau={p.target_tau:.6f} H={p.target_H:.6f}"
              f"  rebuilt H={np.mean(interior(e.H)):.6f}")

    # a minimal plane in L(0,1) turned by a quarter lands on the product limit
    lkt = make_dim4_model("LKT", 0, 1)
    d = extract_fundamental_data(horizontal_plane(lkt, (0, 0.5, 0, 0.5)), 41, 41)
    t, p = daniel_transform(d, np.pi / 2)
    print(f"\nL(0,1) plane, quarter turn: kappa={p.target_kappa:g} tau={p.target_tau:g} H={p.target_H:g}")
    print(f"    dim-4 residuals {dim4_residuals(d).worst:.1e} -> {dim4_residuals(t).worst:.1e}")

    # the twin of a CMC-1 cylinder in the round sphere shares its angle functions
    S3 = make_model((2, 2, 2))
    cyl = vertical_cylinder(S3, 1 + np.sqrt(2), (0, 0.5, 0, 0.5))
    d = extract_fundamental_data(cyl.patch, 50, 50)
    tw, theta = twin_s3(d)
    rec = reconstruct_from_T(S3, d.geometry, tw.T, cyl.companion(0.0, 0.0))
    e = extract_fundamental_data(rec.to_grid_surface())
    print(f"\nS3 twin: theta={theta:.6f}, H {np.mean(d.H):.6f} -> {np.mean(e.H):.6f}, "
          f"angle difference {np.abs(e.nu - d.nu).max():.1e}")


if __name__ == "__main__":
    main()
