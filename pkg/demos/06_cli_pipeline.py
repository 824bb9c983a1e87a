"""Run the command-line pipeline end to end in a temporary directory."""
import json
import sys
import tempfile
from pathlib import Path

from quarticflow.cli import main as cli


def main():
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        steps = [
            ["construct", "--family", "base", "--a", "0", "--out", d / "sys.json"],
            ["check-criterion", "--system", d / "sys.json", "--out", d / "crit.json"],
            ["find-integral", "--system", d / "sys.json", "--out", d / "int.json"],
            ["simulate", "--system", d / "sys.json", "--q0", "1,0", "--p0", "0.5,0.5", "--T", "20",
             "--scheme", "midpoint4", "--integral", d / "int.json", "--every", "10", "--out", d / "traj.csv"],
            ["kovalevskaya-map", "--out", d / "kov.json"],
            ["report", "--system", d / "sys.json", "--criterion", d / "crit.json", "--trajectory", d / "traj.csv",
             "--integral", d / "int.json", "--kovalevskaya", d / "kov.json", "--out", d / "report.json"],
        ]
        for argv in steps:
            code = cli([str(a) for a in argv])
            print(f"quarticflow {argv[0]:18s} exit {code}")
            if code:
                sys.exit(code)
        report = json.loads((d / "report.json").read_text())
        for name, check in sorted(report["checks"].items()):
            print(f"  {name:15s} {check['value']!s:>24}  {'pass' if check['pass'] else 'FAIL'}")


if __name__ == "__main__":
    main()
