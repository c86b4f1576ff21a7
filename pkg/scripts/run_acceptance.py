"""Run the acceptance criteria outside pytest and write a JSON summary.

Usage: python3 scripts/run_acceptance.py [--out results.json]
"""

import argparse
import json
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))

import test_acceptance as acc  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path)
    args = ap.parse_args()
    timings = {}
    for name in sorted(n for n in dir(acc) if n.startswith("test_criterion_")):
        t = time.perf_counter()
        try:
            getattr(acc, name)()
        except AssertionError:
            pass
        timings[int(name.split("_")[2])] = round(time.perf_counter() - t, 2)
    print("\n".join(acc.result_lines()))
    report = {
        str(n): {"passed": ok, "title": title, "detail": note, "seconds": timings.get(n)}
        for n, (ok, title, note) in sorted(acc.RESULTS.items())
    }
    if args.out:
        args.out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0 if all(v["passed"] for v in report.values()) and len(report) == 11 else 1


if __name__ == "__main__":
    sys.exit(main())
