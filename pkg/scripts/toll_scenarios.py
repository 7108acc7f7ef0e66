"""Compare hand-picked toll schemes with the ALO optimum on day and night.

Prints the equilibrium shares, waits and largest stranded crowd for each
scheme. ``--optimize`` also runs the optimizer with the scenario's config,
which takes a few minutes per scenario.

    python3 scripts/toll_scenarios.py [day night] [--optimize] [--workers N]
"""

import argparse
import dataclasses

from queuenet.network import initial_network_state
from queuenet.scenario import load_scenario
from queuenet.tollopt import alo_optimize, fitness

SCHEMES = [(0, 0, 0), (2.3, 0, 0.3), (5, 0, 0), (0, 2, 2), (10, 0, 10)]


def show(label, tolls, f, res):
    if res is None:
        print(f"{label:>22}  solver failed")
        return
    v, rep = res.shares, res.report
    print(f"{label:>22}  shares ({v.alpha:.3f}, {v.beta:.3f}, {v.gamma:.3f})  "
          f"W ({rep.W_X:6.2f}, {rep.W_B:6.2f}, {rep.W_S:6.2f})  L_max {f:7.2f} [{rep.argmax_mode}]")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenarios", nargs="*", default=["day", "night"])
    ap.add_argument("--optimize", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    for name in args.scenarios:
        s = load_scenario(name)
        init = initial_network_state(s)
        print(f"== {name}")
        for tolls in SCHEMES:
            show(str(tolls), tolls, *fitness(tolls, s, init))
        if args.optimize:
            cfg = dataclasses.replace(s.solver.alo, workers=args.workers)
            res = alo_optimize(s, init, cfg)
            elite = tuple(round(float(x), 3) for x in res.elite)
            show(f"ALO {elite}", elite, res.fitness, res.history[-1].info)
        print()


if __name__ == "__main__":
    main()
