"""The Matern kernel at half-integer orders.

The kernel is evaluated through the Bessel recurrence. At order 1/2 it is
the exponential kernel; higher orders give smoother sample paths and Gram
matrices whose spectra decay faster.
"""

import numpy as np

from rrmkrr import KernelSpec, kernel_matrix, matern_eval

r = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 5.0])
print("distance   " + "  ".join(f"{v:8.2f}" for v in r))
for nu in (1.0, 2.0, 3.0, 4.0):
    spec = KernelSpec(nu=nu, dim=1)
    print(f"nu = {nu:.1f}   " + "  ".join(f"{v:8.5f}" for v in matern_eval(spec, r)))

# order 1/2 reduces to exp(-r)
print("\nmax |psi - exp(-r)| at nu = 1:", np.max(np.abs(matern_eval(KernelSpec(1.0, 1), r) - np.exp(-r))))

# the default smoothness for d = 1 is nu = 4, whose Gram matrix is close to singular
X = np.linspace(0, 1, 30)[:, None]
for nu in (1.0, 4.0):
    w = np.linalg.eigvalsh(kernel_matrix(KernelSpec(nu, 1), X).values)
    print(f"nu = {nu}: eigenvalues of K on 30 grid points span {w.max():.2e} .. {w.min():.2e}")
