"""Explicit RK4 on a stiff birth-death chain: accuracy and the positivity step bound.

Sweeps the step size on an M/M/c/K queue and reports the max-abs error against
a fine-step reference together with whether the solver stayed a probability
vector. Steps with dt * max exit rate above about 1 are expected to fail.

    python3 scripts/rk4_stability.py [--lam 3 --mu 0.5 --c 8 --K 100 --t-end 30]
"""

import argparse

import numpy as np

from queuenet.ctmc import InstabilityError, TransientState, birth_death_generator, final_state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=3.0)
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--c", type=int, default=8)
    ap.add_argument("--K", type=int, default=100)
    ap.add_argument("--t-end", type=float, default=30.0)
    args = ap.parse_args(argv)
    g = birth_death_generator(args.K, args.lam, args.mu, args.c)
    p0 = TransientState.point_mass(args.K + 1, 0)
    q_max = args.lam + args.c * args.mu
    ref = final_state(g, p0, args.t_end, 0.001).probs
    print(f"max exit rate {q_max:g}; positivity bound dt <= {1 / q_max:.4f}")
    print(f"{'dt':>8} {'dt*q':>6} {'max-abs err':>12}  status")
    for dt in (0.4, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05, 0.025, 0.01, 0.005):
        try:
            err = float(np.abs(final_state(g, p0, args.t_end, dt).probs - ref).max())
            print(f"{dt:8.3f} {dt * q_max:6.2f} {err:12.3e}  ok")
        except InstabilityError as exc:
            print(f"{dt:8.3f} {dt * q_max:6.2f} {'-':>12}  failed at t={exc.t}: {exc}")


if __name__ == "__main__":
    main()
