"""How far is the heuristic from the optimum on small random networks?"""

import time

import numpy as np

from vnfop import CostWeights, ExactLimits, Infeasible, LimitExceeded, NetworkState, enumerate_vnfs, solve_exact
from vnfop.fixtures import desk_instance
from vnfop.heuristic import provision_batch


def main(seeds=range(30)):
    weights = CostWeights(bandwidth_price=0.001)
    ratios, skipped = [], 0
    started = time.monotonic()
    for seed in seeds:
        inst = desk_instance(seed)
        state = NetworkState(enumerate_vnfs(inst.topology, inst.catalog))
        heur = provision_batch(state, inst.batch, weights)
        try:
            exact = solve_exact(state, inst.batch, weights, ExactLimits(max_nodes=300_000))
        except (Infeasible, LimitExceeded):
            skipped += 1
            continue
        if heur.failures:
            print(f"seed {seed:2d}: heuristic could not place {sorted(heur.failures)}")
            continue
        ratios.append(heur.breakdown.total / exact.breakdown.total)
    r = np.array(ratios)
    print(f"\n{len(r)} instances compared, {skipped} skipped, {time.monotonic() - started:.1f}s")
    print(f"optimal outright: {np.mean(r <= 1 + 1e-9):.0%}   within 1.1: {np.mean(r <= 1.1):.0%}   "
          f"within 1.3: {np.mean(r <= 1.3):.0%}   worst {r.max():.3f}")
    counts, edges = np.histogram(r, bins=[1.0, 1.05, 1.1, 1.2, 1.3, 2.0])
    for c, lo, hi in zip(counts, edges, edges[1:]):
        print(f"  [{lo:.2f}, {hi:.2f})  {'#' * c}")


if __name__ == "__main__":
    main()
