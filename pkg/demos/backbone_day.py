"""Replay a synthetic day of requests on the 12-switch backbone.

Requests arrive in 24 hourly batches whose volume follows a daily cycle and
are never released, so the network fills up as the day goes on.
"""

from vnfop import CostWeights
from vnfop.fixtures import internet2, middlebox_catalog
from vnfop.simulator import generate_trace, hop_cdf, replay


def main():
    topo, catalog = internet2(), middlebox_catalog()
    trace = generate_trace(topo, catalog, batches=24, mean_requests=4, seed=0)
    print(f"{len(trace.requests)} requests in {len(trace.batches)} batches\n")
    print("batch  placed  failed  servers  util   deploy   energy     total")
    records = []
    for rec, _ in replay(trace, topo, catalog, CostWeights(bandwidth_price=0.001)):
        records.append(rec)
        b = rec.breakdown
        print(f"{rec.label:5d}  {len(rec.traffics):6d}  {len(rec.failures):6d}  {rec.active_servers:7d}  "
              f"{rec.utilization:.2f}  {b.deployment:7.1f}  {b.energy:7.1f}  {b.total:8.1f}")

    cdf = hop_cdf(records)
    print("\nshare of VNFs within k hops of the ingress:",
          "  ".join(f"{k}:{v:.2f}" for k, v in enumerate(cdf.ingress)))
    print("share of VNFs within k hops of the egress: ",
          "  ".join(f"{k}:{v:.2f}" for k, v in enumerate(cdf.egress)))


if __name__ == "__main__":
    main()
