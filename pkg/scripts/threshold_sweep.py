"""Coverage versus the common SIR threshold for Models 1-4."""
import numpy as np

from common import BASE_SCALE, evaluate, kernel, parser, write
from hetnet_pcp import baseline_closed_form, section_v_model


def main():
    p = parser(__doc__)
    p.add_argument("--db", default="-0.5:20:2.5", help="start:stop:step in dB (threshold > 0 dB)")
    args = p.parse_args()
    start, stop, step = (float(v) for v in args.db.split(":"))
    k = kernel(args.kernel, BASE_SCALE[args.kernel])
    rows = []
    seed = args.seed
    for db in np.arange(start, stop + step / 2, step):
        beta = 10 ** (db / 10)
        if beta <= 1:
            continue
        for number in (1, 2, 3, 4):
            model = section_v_model(number, k, beta=beta)
            row = {"threshold_db": round(float(db), 6), "model": number,
                   "baseline": baseline_closed_form(model)}
            row.update(evaluate(model, args.mc, seed))
            seed += 1
            rows.append(row)
    write(rows, args.out)


if __name__ == "__main__":
    main()
