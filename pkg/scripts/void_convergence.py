"""Void probability of a disc under a PCP as the cluster scale grows.

lambda_p * m is held fixed so the limit is the PPP value exp(-lambda_p m |A|).
"""
import math

from common import kernel, parser, write
from hetnet_pcp.functionals import OutsideDisc, pgfl_pcp
from hetnet_pcp.geometry import PCP
from hetnet_pcp.montecarlo import SimulationConfig, estimate_void_probability


def main():
    p = parser(__doc__)
    p.add_argument("--radius", type=float, default=100.0)
    p.add_argument("--cluster-size", type=float, default=2.0)
    p.add_argument("--mean-count", type=float, default=0.5, help="lambda_p m |A|")
    p.add_argument("--scales", default="0.1,0.3,1,3,10,30", help="kernel scale / disc radius")
    args = p.parse_args()
    r, m = args.radius, args.cluster_size
    lp = args.mean_count / (m * math.pi * r * r)
    limit = math.exp(-args.mean_count)
    rows = []
    for s in (float(v) for v in args.scales.split(",")):
        k = kernel(args.kernel, s * r)
        row = {"kernel": args.kernel, "scale": s, "limit": limit,
               "analytic": float(pgfl_pcp(lp, m, k, OutsideDisc(r), 1.0))}
        if args.mc:
            est = estimate_void_probability(PCP(lp, m, k), r, SimulationConfig(args.mc, rng_seed=args.seed))
            row.update(mc=est.value, mc_half_width=est.half_width)
        rows.append(row)
    write(rows, args.out)


if __name__ == "__main__":
    main()
