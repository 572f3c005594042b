# Background
# ----------
#  Subtracting the volume term |L| E{gamma(H)_00} from the restricted trace
#  leaves fluctuations of size |L|^(1/2). Over independent realizations the
#  normalized fluctuation is close to a centered Gaussian.
#
# Shown here
# ----------
#  - the i.i.d. sanity case a = phi = id, where the trace is a sum of V_j
#  - the entropy case phi = r_2, a = n_F, with a KS test against the normal law

import numpy as np

from szegolab import PotentialDistribution, fermi, identity_symbol, renyi, run_clt
from szegolab.limits import KS_THRESHOLD

dist = PotentialDistribution.uniform(1.0)


def report(title, samples, rep):
    print(f"{title}: n={rep.n}  var={rep.sigma2_hat:.5f}  KS D*sqrt(n)={rep.ks_scaled:.3f} "
          f"(threshold {KS_THRESHOLD})  verdict={rep.verdict}")
    counts, edges = rep.histogram
    for c, lo in zip(counts, edges):
        print(f"  {lo:+.3f} {'#' * int(60 * c / counts.max())}")


if __name__ == "__main__":
    ident = identity_symbol()
    s, r = run_clt(dist, ident, ident, 64, 0, 1000, "ids", seed=0)
    report("sum of V_j (variance 1/3 expected)", s, r)
    s, r = run_clt(dist, fermi(3.0), renyi(2.0), 64, 48, 400, "self", seed=0, workers=4)
    report("Renyi-2 entropy of n_F(H)_L", s, r)
    print("mean trace per site:", np.mean(s.traces) / (2 * 64 + 1))
