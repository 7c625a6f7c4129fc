"""Extract the fundamental data of a surface and check the compatibility equations."""

import numpy as np

from metric_lie_surfaces.model_core import make_dim4_model, make_model
from metric_lie_surfaces.special_surfaces import horizontal_plane, round_sphere, vertical_cylinder
from metric_lie_surfaces.surface_geometry import (
    compatibility_residuals, derived_fields, dim4_residuals, extract_fundamental_data, interior,
)


def show(name, data):
    rep = compatibility_residuals(data)
    print(f"{name}: signs {data.eh}, H in [{data.H.min():.6f}, {data.H.max():.6f}], "
          f"K in [{data.K.min():.6f}, {data.K.max():.6f}]")
    for key, (mx, rms) in rep.summary().items():
        print(f"    {key:10s} max {mx:.2e}  rms {rms:.2e}")


def main():
    nil = make_dim4_model("EKT", 0, 0.5)
    cyl = extract_fundamental_data(vertical_cylinder(nil, 1.0, (0, 0.5, 0, 0.5)).patch, 61, 61)
    show("Nil vertical cylinder", cyl)
    print("    dim-4 residuals:", {k: f"{v[0]:.1e}" for k, v in dim4_residuals(cyl).summary().items()})

    sphere = extract_fundamental_data(round_sphere(make_model((0, 0, 0)), 2.0), 61, 61)
    show("Euclidean sphere r=2", sphere)
    df = derived_fields(sphere)
    print(f"    zeta {np.mean(interior(df.zeta)):.6f}, psi {np.mean(interior(df.psi)):.6f}")

    # a spacelike plane in a Lorentzian model
    lkt = make_dim4_model("LKT", 0, 1)
    show("L(0,1) horizontal plane", extract_fundamental_data(horizontal_plane(lkt), 61, 61))

    # residuals shrink under refinement
    print("\nrefinement on the Nil cylinder (extent 0.5):")
    for n in (21, 41, 81):
        d = extract_fundamental_data(vertical_cylinder(nil, 1.0, (0, 0.5, 0, 0.5)).patch, n, n)
        print(f"    n={n:3d} h={0.5 / (n - 1):.5f} worst residual {compatibility_residuals(d).worst:.2e}")


if __name__ == "__main__":
    main()
