"""Survey decomposition cardinalities over seeded random corpora.

For separable input it reports how often n equals max(rank, PT rank). For
entangled input it reports the (n_plus, n_minus) pairs by rank, the rate of
the cardinality-4 fallback, and the spread of the constructive q.

    python3 scripts/cardinality_survey.py --count 200 --seed 1
"""

import argparse
from collections import Counter

import numpy as np

from qsep.pseudomixture import pseudomix
from qsep.qlinalg import numerical_rank, partial_transpose
from qsep.separable_decomp import decompose
from qsep.states import StateRng, random_entangled, random_pure, random_separable


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = StateRng(args.seed)

    law = Counter()
    for i in range(args.count):
        rho = random_separable(rng, 1 + i % 6)
        r, rb = numerical_rank(rho), numerical_rank(partial_transpose(rho))
        law[(r, rb, len(decompose(rho)) == max(r, rb))] += 1
    print("separable: (rank, PT rank, n == max) -> count")
    for key in sorted(law):
        print(f"  {key}: {law[key]}")

    print("entangled: rank -> (n_plus, n_minus) counts, fallback rate, q quartiles")
    for rank in (1, 2, 3, 4):
        pairs, fallbacks, qs = Counter(), 0, []
        for _ in range(args.count // 4):
            rho = random_pure(rng) if rank == 1 else random_entangled(rng, rank)
            pm = pseudomix(rho)
            pairs[(len(pm.positive_part), len(pm.negative_part))] += 1
            fallbacks += pm.cardinality4_fallback
            qs.append(pm.q)
        quart = np.percentile(qs, [25, 50, 75])
        print(f"  rank {rank}: {dict(pairs)}, fallback {fallbacks}/{len(qs)}, q {np.round(quart, 4).tolist()}")


if __name__ == "__main__":
    main()
