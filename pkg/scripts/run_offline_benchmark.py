#!/usr/bin/env python3
"""Offline benchmark experiment on the shipped 50-case suite.

Two runs, both on the scripted backend (no network, no tokens):

1. oracle planner - every case answered with its ground-truth plan; this is
   the harness self-check and must come out at 100% in every band.
2. degraded planner - the 13 designated Level-1 cases get unusable replies,
   reproducing the known 0-shot Level-1 reference row (16, 3, 13, 18.75%).

    python scripts/run_offline_benchmark.py --k 0,1,2,3 --out bench_out/
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from relgate.bench import (
    SuiteRunConfig,
    format_report,
    oracle_fixtures,
    run_suite,
)
from relgate.gateway import Fixture, ScriptedBackend
from relgate.suite import shipped_suite


def run(cases, dataset, kb, k_list, n_samples, fail_ids=frozenset()):
    fixtures = oracle_fixtures(cases, k_list, n_samples, fail_case_ids=fail_ids)
    backend = ScriptedBackend(tuple(Fixture(**f) for f in fixtures))
    return run_suite(cases, dataset, kb, backend,
                     SuiteRunConfig(k_list=k_list, n_samples=n_samples))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", default="0,1,2,3")
    parser.add_argument("--n", type=int, default=3)
    parser.add_argument("--out", type=Path, default=None)
    args = parser.parse_args()
    k_list = tuple(int(k) for k in args.k.split(","))

    suite = shipped_suite()
    print(f"suite {suite.name}: {len(suite.cases)} cases over "
          f"{suite.dataset.row_count} rows\n")

    oracle_report = run(suite.cases, suite.dataset, suite.kb, k_list, args.n)
    print("== oracle planner (harness self-check) ==")
    print(format_report(oracle_report))

    l1 = sorted(c.id for c in suite.cases if c.difficulty == 1)[:13]
    degraded_report = run(suite.cases, suite.dataset, suite.kb, (0,), args.n,
                          fail_ids=frozenset(l1))
    print("== degraded planner (13 failing Level-1 cases at 0-shot) ==")
    print(format_report(degraded_report))

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "oracle_report.txt").write_text(
            format_report(oracle_report), encoding="utf-8")
        (args.out / "oracle_report.json").write_text(
            json.dumps(oracle_report.to_dict(), indent=2), encoding="utf-8")
        (args.out / "degraded_report.txt").write_text(
            format_report(degraded_report), encoding="utf-8")
        (args.out / "degraded_report.json").write_text(
            json.dumps(degraded_report.to_dict(), indent=2), encoding="utf-8")
        print(f"reports written to {args.out}/")


if __name__ == "__main__":
    main()
