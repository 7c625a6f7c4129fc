"""Constant-angle surfaces, totally geodesic surfaces and vertical cylinders."""

import numpy as np

from metric_lie_surfaces.model_core import make_dim4_model, make_model
from metric_lie_surfaces.special_surfaces import (
    constant_angle_set, integral_surface, totally_geodesic, vertical_cylinder,
)
from metric_lie_surfaces.surface_geometry import extract_fundamental_data


def main():
    for c in [(2, 2, 2), (0, 0, 1), (1, -1, 0), (1, 1, 0), (1, 2, -1), (1, 2, 3)]:
        s = constant_angle_set(make_model(c))
        pts = s.sample(3) if s.kind in ("points", "curves") else []
        print(f"constant angles for c={c}: {s.kind}", np.round(pts, 4).tolist() if len(pts) else "")

    m = make_model((-1, 1, 0))
    res = totally_geodesic(m)
    print(f"\ntotally geodesic surfaces for c=(-1,1,0): {res.kind}")
    for dist in res.distributions:
        patch = integral_surface(m, dist.nu, (0.1, -0.2, 0.3), extent=0.05)
        d = extract_fundamental_data(patch, 101, 101)
        print(f"    normal {np.round(dist.nu, 4)}: max |S| = {np.abs(d.S).max():.1e}")

    for kappa, tau in [(0, 0.5), (-1, 1), (2, 0.3)]:
        cyl = vertical_cylinder(make_dim4_model("EKT", kappa, tau), 1.0, (0, 0.5, 0, 0.5))
        d = extract_fundamental_data(cyl.patch, 41, 41)
        e = extract_fundamental_data(cyl.companion, 41, 41)
        print(f"E({kappa},{tau}) cylinder r=1: H={cyl.H:.4f}, companion H={np.mean(e.H):.4f}, "
              f"angle difference {np.abs(e.nu - d.nu).max():.1e}")


if __name__ == "__main__":
    main()
