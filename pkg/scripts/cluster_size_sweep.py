"""Coverage of Models 2-4 as the cluster size (r_d or sigma) grows."""
from common import evaluate, kernel, parser, write
from hetnet_pcp import baseline_closed_form, section_v_model


def main():
    p = parser(__doc__)
    p.add_argument("--sizes", default="10,20,40,80,160,320,640,1280",
                   help="comma-separated r_d (matern) or sigma (thomas) in meters")
    p.add_argument("--beta", type=float, default=5.0, help="linear threshold")
    args = p.parse_args()
    rows = []
    seed = args.seed
    for size in (float(s) for s in args.sizes.split(",")):
        for number in (1, 2, 3, 4):
            model = section_v_model(number, kernel(args.kernel, size), beta=args.beta)
            row = {"kernel": args.kernel, "size": size, "model": number,
                   "baseline": baseline_closed_form(model)}
            row.update(evaluate(model, args.mc, seed))
            seed += 1
            rows.append(row)
    write(rows, args.out)


if __name__ == "__main__":
    main()
