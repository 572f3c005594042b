# Background
# ----------
#  The free chain H0 (hopping -1, no potential) on N sites has the explicit
#  spectrum -2 cos(k pi / (N+1)). Adding an i.i.d. potential smears the
#  eigenvalue counting function into the integrated density of states.
#
# Shown here
# ----------
#  - both eigensolver backends against the free spectrum
#  - the free IDS arccos(-E/2)/pi recovered from box eigenvalues
#  - how a uniform potential widens the spectrum to [-2 - W, 2 + W]

import numpy as np

from szegolab import PotentialDistribution, build_hamiltonian, eig_tridiagonal, free_ids, ids_cdf


def free_spectrum_errors(sizes=(8, 64, 512)):
    for n in sizes:
        exact = -2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
        T = build_hamiltonian(np.zeros(n))
        for method in ("lapack", "ql"):
            err = np.max(np.abs(eig_tridiagonal(T, method=method).values - exact))
            print(f"N={n:4d}  {method:6s}  max error {err:.1e}")


def ids_table():
    E = np.linspace(-3, 3, 13)
    free = ids_cdf(PotentialDistribution.constant(0.0), E, 256, 1)
    disordered = ids_cdf(PotentialDistribution.uniform(1.0), E, 256, 50, seed=0)
    print("\n     E   exact free   free box   uniform(1)")
    for e, ex, f, d, se in zip(E, free_ids(E), free.values, disordered.values, disordered.stderr):
        print(f"{e:6.2f}   {ex:9.4f}   {f:8.4f}   {d:7.4f} +- {se:.4f}")


if __name__ == "__main__":
    free_spectrum_errors()
    ids_table()
