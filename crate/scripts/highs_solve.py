#!/usr/bin/env python3
"""Solve an LP-format 0-1 model with HiGHS and write "name value" lines.

Exit codes: 0 optimal, 10 infeasible, 11 time limit, 12 stopped with an
incumbent, 1 anything else.
"""
import argparse
import sys

import highspy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--mip-gap", type=float, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", args.threads)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 1
    if args.time_limit is not None:
        h.setOptionValue("time_limit", args.time_limit)
    if args.mip_gap is not None:
        h.setOptionValue("mip_rel_gap", args.mip_gap)
    h.run()
    status = h.getModelStatus()
    S = highspy.HighsModelStatus

    if status in (S.kInfeasible, S.kUnboundedOrInfeasible):
        return 10
    if status == S.kModelEmpty:
        open(args.solution, "w").close()
        return 0

    has_incumbent = h.getInfo().primal_solution_status == 2
    if has_incumbent:
        names = h.getLp().col_names_
        values = h.getSolution().col_value
        with open(args.solution, "w") as out:
            for name, value in zip(names, values):
                out.write(f"{name} {value:.9g}\n")

    if status == S.kOptimal:
        return 0
    if status == S.kTimeLimit:
        return 11
    if has_incumbent:
        return 12
    print(f"solver stopped: {h.modelStatusToString(status)}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
