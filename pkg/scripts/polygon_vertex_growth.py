#!/usr/bin/env python3
"""Record how many vertices the parametric-alignment polygon has as
sequence length grows.

The number of optimal-alignment regions in the (mismatch, gap) penalty
plane equals the polygon's vertex count; theory bounds it by O(n^{2/3}),
and in practice it grows far slower than the alignment count.  This
script samples random sequence pairs up to length 50 and prints the
observed counts next to n^{2/3} for reference (reported, not asserted).
"""

import argparse

import numpy as np

from phylokit.pairhmm import delannoy_count, parametric_polygon

NUC = "ACGT"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-length", type=int, default=50)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.Generator(
        np.random.Philox(key=np.array([args.seed, 0], dtype=np.uint64))
    )
    print(f"{'n':>4} {'mean_vertices':>14} {'max_vertices':>13} "
          f"{'n^(2/3)':>9} {'alignments':>22}")
    for n in range(2, args.max_length + 1, 4):
        counts = []
        for _ in range(args.trials):
            s1 = "".join(NUC[i] for i in rng.integers(0, 4, size=n))
            s2 = "".join(NUC[i] for i in rng.integers(0, 4, size=n))
            counts.append(len(parametric_polygon(s1, s2).polygon.vertices))
        print(
            f"{n:>4} {np.mean(counts):>14.2f} {max(counts):>13} "
            f"{n ** (2 / 3):>9.2f} {delannoy_count(n, n):>22}"
        )


if __name__ == "__main__":
    main()
