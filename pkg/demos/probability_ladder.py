"""Measure ladder: tilted measures collapsing onto the reference.

The rung-n measure reweights paths by a density with tilt size 2^-n. The
density diagnostics (terminal L1 gap, uniform gap, two quadratic
variations) all vanish, the implied drift correction shrinks like the
square of the tilt, and the wealth distance between the tilted and
reference optima decays alongside. The information component of the
two-part distance split is identically zero here because the filtration
never moves.
"""

import numpy as np

from growthlab import Ball, MarketSpec, TiltSpec
from growthlab.stability import probability_ladder


def main():
    spec = MarketSpec(dim=2, n_steps=80,
                      covariance=[[0.5, 0.1], [0.1, 0.4]],
                      drift=[0.8, 0.5])
    tilt = TiltSpec(lam1=np.array([0.5, -0.3]))
    report = probability_ladder(spec, tilt, Ball(2.0), n_paths=2000, seed=5,
                                eps_ladder=2.0 ** -np.arange(1, 7))

    summ = report.summary()
    names = ("z_l1", "z_sup", "zz_qv", "rr_qv", "drift_gap", "main2_fv")
    header = " ".join(f"{n:>10s}" for n in names)
    print(f"{'eps':>8s} {header}")
    for i, eps in enumerate(report.scales):
        cells = " ".join(f"{summ[n]['mean'][i]:10.6f}" for n in names)
        print(f"{eps:8.4f} {cells}")

    print(f"\ninformation component max |main1|: "
          f"{np.max(np.abs(report.per_path['main1_fv'])):.1e} (zero by design)")
    slopes = report.slopes()
    bad = [n for n, r in slopes.items() if not r["passed"]]
    print("all diagnostics decaying" if not bad else f"NOT decaying: {bad}")


if __name__ == "__main__":
    main()
