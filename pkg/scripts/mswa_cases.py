"""Run the MSWA equilibrium on the bundled cases and print the convergence trace.

    python3 scripts/mswa_cases.py [case1 case2 ...] [--d 1.0]
"""

import argparse
import dataclasses

from queuenet.equilibrium import mswa_solve
from queuenet.network import initial_network_state
from queuenet.scenario import load_scenario


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenarios", nargs="*", default=["case1", "case2"])
    ap.add_argument("--d", type=float, default=None, help="step-size exponent override")
    args = ap.parse_args(argv)
    for name in args.scenarios:
        s = load_scenario(name)
        cfg = s.solver.mswa if args.d is None else dataclasses.replace(s.solver.mswa, d=args.d)
        r = mswa_solve(initial_network_state(s), s, cfg=cfg)
        print(f"== {name}: converged={r.converged} after {r.iterations} iterations "
              f"(eps {cfg.eps:g}, d {cfg.d:g})")
        print(f"{'it':>3} {'alpha':>7} {'beta':>7} {'gamma':>7} {'W_X':>7} {'W_B':>7} {'W_S':>7} "
              f"{'W_mean':>7} {'error':>10}")
        for it in r.trace:
            v, rep = it.shares, it.report
            print(f"{it.iteration:3d} {v.alpha:7.4f} {v.beta:7.4f} {v.gamma:7.4f} {rep.W_X:7.2f} {rep.W_B:7.2f} "
                  f"{rep.W_S:7.2f} {rep.W_mean:7.2f} {it.error:10.3e}")
        print(f"fixed-point residual {r.residual:.3e}; next MSWA move {r.next_change:.3e}\n")


if __name__ == "__main__":
    main()
