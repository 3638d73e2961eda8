"""High-precision evaluation of the block-size formulas.

Frozen values printed here are pasted into the C++ tests; this script is an
independent route (mpmath, 50 digits) and never calls the library.
"""
from fractions import Fraction
import math

import mpmath as mp

mp.mp.dps = 50

PARAMETER_SETS = {
    # name: (lambda_k, lambda_k1, delta0, d, k, chernoff_c, cbar)
    "A": ("0.5", "0.1", "0.1", 100, 4, "1", "1"),
    "B": ("0.12", "0.03", "0.05", 100, 4, "0.5", "2"),
    "C": ("1.0", "0.5", "0.01", 1000, 10, "2", "1"),
    "D": ("0.5", "0.1", "0.1", 100, 4, "1", "1600"),
}


def theoretical_block_size(i, lam, lam1, delta0, d, k, c, cbar):
    lam, lam1, delta0, c, cbar = map(mp.mpf, (lam, lam1, delta0, c, cbar))
    lam_t = max(lam1, lam / 4)
    gamma = (lam_t / lam) ** mp.mpf("0.25")
    delta = (lam - lam_t) / 4
    eps0 = mp.sqrt(cbar / (k * d))
    eps_prev = eps0 * gamma ** (i - 1)
    beta = min(gamma / mp.sqrt(1 + eps_prev**2), gamma * eps_prev)
    delta_i = delta0 / (2 * i * i)
    raw = (c / (delta * beta) ** 2) * mp.log(d / delta_i)
    return int(mp.ceil(raw)), raw


def main():
    for name, p in PARAMETER_SETS.items():
        sizes = []
        closest = 1.0
        for i in range(1, 51):
            n, raw = theoretical_block_size(i, *p)
            frac = float(raw - mp.floor(raw))
            closest = min(closest, frac, 1 - frac)
            sizes.append(n)
        print(f"set {name}: first 20 = {sizes[:20]}")
        print(f"  i=21..50 = {sizes[20:]}")
        print(f"  closest distance to an integer: {closest:.3e}")

    # bpca block for N=100000, d=22026, L=1
    T = int(mp.floor(mp.log(22026)))
    print("ln(22026) =", mp.nstr(mp.log(22026), 20), "T =", T, "block =", 100000 // T)

    # DBPCA ceil recurrence in exact rationals
    for g in ("0.6", "0.7", "0.8", "0.9"):
        r = Fraction(g)
        s = [8]
        for _ in range(49):
            s.append(math.ceil(Fraction(s[-1]) / r))
        print(f"dbpca k=4 gamma_sq={g}: {s}")


if __name__ == "__main__":
    main()
