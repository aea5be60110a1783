"""Constructive q for pure states against the concurrence sin 2A.

For cos A |00> + sin A |11> the pipeline's q should equal sin 2A; random
local unitaries must not change it.

    python3 scripts/pure_state_q.py --points 9
"""

import argparse

import numpy as np

from qsep.pseudomixture import pseudomix
from qsep.states import StateRng, canonical_pure


def local_unitary(rng: StateRng) -> np.ndarray:
    def u2():
        q, r = np.linalg.qr(rng.complex_normal(4).reshape(2, 2))
        return q * (np.diag(r) / abs(np.diag(r)))

    return np.kron(u2(), u2())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = StateRng(args.seed)
    print("A\tsin2A\tq\tq_rotated")
    for a in np.linspace(0.05, np.pi / 4, args.points):
        rho = canonical_pure(a)
        u = local_unitary(rng)
        q = pseudomix(rho).q
        q_rot = pseudomix(u @ rho @ u.conj().T).q
        print(f"{a:.4f}\t{np.sin(2 * a):.10f}\t{q:.10f}\t{q_rot:.10f}")


if __name__ == "__main__":
    main()
