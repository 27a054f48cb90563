#!/usr/bin/env python3
"""
Run the acceptance suites and write one JSON results file.

Usage:
    python scripts/run_acceptance.py [--profile quick] [--seed 5] [--output results.json] [SUITE ...]
"""
import json
import logging
import os
import sys
import time

import click

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "teamlog"))

from src.config.budget_config import DEFAULT_CONFIGS, get_budget_config  # noqa: E402
from src.config.suite_config import DEFAULT_SUITES  # noqa: E402
from src.teamlog.suite_runner import SuiteRunner  # noqa: E402

logging.basicConfig(level=os.environ.get("TEAMLOG_LOG_LEVEL", "WARNING").upper())
logger = logging.getLogger(__name__)


def run_suites(names, profile, seed):
    """Run each suite in turn, printing a line per suite."""
    runner = SuiteRunner(get_budget_config(profile))
    reports = []
    for name in names:
        print(f"🧪 Running {name}...")
        report = runner.run(name, seed)
        if report.passed:
            print(f"✅ {name}: {report.cases} cases, {report.skipped} skipped, {report.coverage} ({report.duration_seconds:.1f}s)")
        else:
            print(f"❌ {name}: {len(report.failures)} failures shown")
            for failure in report.failures:
                print(f"  • {json.dumps(failure, ensure_ascii=False)}")
        reports.append(report)
    return reports


@click.command()
@click.argument("suites", nargs=-1, type=click.Choice(list(DEFAULT_SUITES)))
@click.option("--profile", default="desk", show_default=True, type=click.Choice(sorted(DEFAULT_CONFIGS)))
@click.option("--seed", type=int, default=None, help="Seed for every suite (default: each suite's own).")
@click.option("--output", default="acceptance_results.json", show_default=True, type=click.Path(dir_okay=False))
def main(suites, profile, seed, output):
    """Run the teamlog acceptance suites (default: all of them)."""
    names = list(suites) or list(DEFAULT_SUITES)
    print(f"🚀 Acceptance run: {len(names)} suites, profile {profile}")
    print("=" * 60)
    start_time = time.time()
    reports = run_suites(names, profile, seed)

    passed = all(report.passed for report in reports)
    with open(output, "w", encoding="utf-8") as handle:
        json.dump({"passed": passed, "reports": [report.to_dict() for report in reports]}, handle, indent=2, ensure_ascii=False)

    print("\n" + "=" * 60)
    print("📊 ACCEPTANCE SUMMARY")
    print("-" * 30)
    print(f"✅ Passed: {sum(report.passed for report in reports)}/{len(reports)} suites")
    print(f"⏱️  Duration: {time.time() - start_time:.1f}s")
    print(f"📄 Results written to {output}")
    if passed:
        print("🎉 ALL SUITES PASSED")
    sys.exit(0 if passed else 1)


if __name__ == "__main__":
    main()
