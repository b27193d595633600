"""Coverage of Models 2-4 against the small-cell (parent) intensity ratio to tier 1.

Model 2 sweeps lambda_2 / lambda_1; Models 3-4 sweep lambda_p2 / lambda_1
with the mean cluster size held fixed.
"""
from dataclasses import replace

from common import BASE_SCALE, evaluate, kernel, parser, write
from hetnet_pcp import PPP, section_v_model


def with_ratio(model, ratio):
    lam1 = model.tier(1).process.intensity
    p = model.tier(2).process
    if isinstance(p, PPP):
        return model.replace_tier(2, process=PPP(ratio * lam1))
    return model.replace_tier(2, process=replace(p, parent_intensity=ratio * lam1))


def main():
    p = parser(__doc__)
    p.add_argument("--ratios", default="1,3,10,30,100,300,1000")
    p.add_argument("--beta", type=float, default=5.0)
    args = p.parse_args()
    k = kernel(args.kernel, BASE_SCALE[args.kernel])
    rows = []
    seed = args.seed
    for ratio in (float(r) for r in args.ratios.split(",")):
        for number in (1, 2, 3, 4):
            model = with_ratio(section_v_model(number, k, beta=args.beta), ratio)
            row = {"ratio": ratio, "model": number}
            row.update(evaluate(model, args.mc, seed))
            seed += 1
            rows.append(row)
    write(rows, args.out)


if __name__ == "__main__":
    main()
