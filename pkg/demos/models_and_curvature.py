"""Metric Lie group models: classification, frames and curvature."""

import numpy as np

from metric_lie_surfaces.model_core import (
    cover_map, frame_at, make_dim4_model, make_model, ricci_eigenvalues, sectional_curvature,
)


def main():
    for label, m in [("round sphere", make_model((2, 2, 2))),
                     ("Nil", make_dim4_model("EKT", 0, 0.5)),
                     ("Sol", make_model((1, -1, 0))),
                     ("anti-de Sitter", make_model((2, 2, -2), (1, 1, -1))),
                     ("generic SU(2)", make_model((1, 2, 3)))]:
        fam = m.family
        extra = "" if fam is None else f", {fam.family.value}(kappa={fam.kappa:g}, tau={fam.tau:g})"
        print(f"{label:15s} {m.group_type.value:6s} iso_dim={m.iso_dim} global={m.is_global}{extra}")
        print(f"{'':15s} Ricci eigenvalues {np.round(ricci_eigenvalues(m), 6)}")

    # the round sphere has sectional curvature 1 on every plane
    rng = np.random.default_rng(0)
    S3 = make_model((2, 2, 2))
    X, Y = rng.normal(size=(2, 1000, 3))
    K = sectional_curvature(S3, X, Y)
    print(f"\nS3 sectional curvature: min {K.min():.12f} max {K.max():.12f}")

    # the frame at a point, as coordinate vectors, and its image in the quaternion model
    p = np.array([0.3, -0.2, 0.5])
    print("frame at", p, "\n", np.round(frame_at(S3, p).B, 6))
    a, b = cover_map(S3, p)
    print(f"covering map: a={a:.6f} b={b:.6f}  |a|^2+|b|^2={abs(a) ** 2 + abs(b) ** 2:.15f}")


if __name__ == "__main__":
    main()
