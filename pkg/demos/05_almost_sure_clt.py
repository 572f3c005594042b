# Background
# ----------
#  Along a single realization, the normalized fluctuations of nested boxes
#  [-m, m] are strongly correlated, yet their logarithmic averages
#      L_M(Delta) = sum_m (1/m) 1_Delta(Z_m) / sum_m (1/m)
#  still converge to the Gaussian mass of Delta. The convergence is slow
#  (log M), so single trajectories scatter noticeably.
#
# Shown here
# ----------
#  - identity case, exact grid, several seeds
#  - spectral case with ensemble centering vs IDS centering

from szegolab import PotentialDistribution, fermi, identity_symbol, renyi, run_asclt

dist = PotentialDistribution.uniform(1.0)

if __name__ == "__main__":
    ident = identity_symbol()
    print("identity case, M=3000, target 0.6827")
    for seed in range(6):
        tr = run_asclt(dist, ident, ident, 3000, "exact", 0, [(-1, 1)], seed=seed)
        print(f"  seed {seed}: L = {tr.final[0]:.3f}")
    a, phi = fermi(3.0), renyi(2.0)
    for centering in ("ensemble", "ids"):
        tr = run_asclt(dist, a, phi, 120, "geometric", 48, [(-1, 1)], seed=0, centering=centering,
                       n_center=40, n_mu=5000, n_sites=5000, estimator_B=30)
        print(f"spectral case, centering={centering:8s}: L = {tr.final[0]:.3f}  (mean Z = {tr.Z.mean():+.2f})")
    # IDS centering leaves the O(1) boundary term of the trace in Z_m, shifting it at these box sizes
