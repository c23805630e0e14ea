"""A coarse epsilon sweep (a few minutes on one core): planted n-vortex states relaxed by
L-BFGS, then the weak-L2 norm of the covariant gradient divided by n."""

from glvortex.minimizer import epsilon_sweep
from glvortex.verify import check_n_comparability_band

runs = [{"epsilon": eps, "h_ex": 12.0, "n": n, "h_factor": 4} for n in (1, 2) for eps in (0.16, 0.08)]
plan = {"domain": {"shape": "disk", "radius": 1.0}, "runs": runs, "seed_recipe": "wn",
        "tolerances": {"grad": 1e-4, "max_iter": 1500}}
results, records = epsilon_sweep(plan)
for r in records:
    if "error" in r:
        print(r["index"], r["error"])
        continue
    print(f"n={r['n']} eps={r['epsilon']:.2f}: ratio {r['ratio']:.3f}  curl error {r['curl_error']:.3f}  "
          f"converged {r['minimize']['converged']}")
band = check_n_comparability_band(records)
print(f"max/min ratio {band['band_ratio']:.3f}; curl error decreasing {band['curl_error_decreasing']}")
