"""Parses the causal-diff DOT emitted by `xaip diff --dot` with pydot.

Exits 77 (reported as skipped) when pydot is not installed.
"""

import subprocess
import sys
from pathlib import Path

try:
    import pydot
except ImportError:
    print("pydot not installed; skipping")
    sys.exit(77)


def main() -> int:
    cli, fixtures = sys.argv[1], Path(sys.argv[2]) / "warehouse"
    model = ["--domain", str(fixtures / "domain.pddl"), "--problem", str(fixtures / "problem.pddl")]
    base = fixtures / "plan_original.txt"
    failures = 0
    for other in ("plan_original.txt", "plan_replace_in_state.txt", "plan_force_unload.txt"):
        out = subprocess.run([cli, "diff", *model, "--plan-a", str(base), "--plan-b", str(fixtures / other), "--dot"],
                             capture_output=True, text=True)
        if out.returncode != 0:
            print(f"{other}: exit {out.returncode}: {out.stderr}")
            failures += 1
            continue
        graphs = pydot.graph_from_dot_data(out.stdout)
        if not graphs or len(graphs) != 1:
            print(f"{other}: DOT did not parse\n{out.stdout}")
            failures += 1
            continue
        g = graphs[0]
        print(f"{other}: {len(g.get_nodes())} nodes, {len(g.get_edges())} edges")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
