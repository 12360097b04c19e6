#!/usr/bin/env python3
"""Print the benchmark scenario's parameter and first-order MSE tables.

Equivalent to running `meanerr params` followed by `meanerr theory`; kept as
one script so the two reference tables land in a single terminal scroll.
"""

import argparse
import sys

from meanerr.cli import render_table, scenario_table, theory_table
from meanerr.ingest import DEFAULT_PRESET, preset, preset_names


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default=DEFAULT_PRESET,
                        choices=preset_names())
    parser.add_argument("--format", default="md", choices=("csv", "json", "md"))
    args = parser.parse_args(argv)

    params = preset(args.preset)
    print(render_table(scenario_table(params, f"preset {args.preset}"),
                       args.format))
    print(render_table(theory_table(params), args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
