"""Print the result table for both reference scenarios at one seed.

    python scripts/reproduce_tables.py [--seed 0] [--trials 15]
"""

import argparse
import time

from cbfnav.outputs import format_table
from cbfnav.scenarios import SCENARIOS
from cbfnav.sim import Mode, run_monte_carlo


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=15)
    args = p.parse_args()
    for sid, make in SCENARIOS.items():
        t0 = time.perf_counter()
        reports = [run_monte_carlo(make(mode, seed=args.seed, trial_count=args.trials)) for mode in Mode]
        print(f"\nScenario {sid} (seed {args.seed}, {time.perf_counter() - t0:.1f} s)")
        print(format_table(reports))


if __name__ == "__main__":
    main()
