import json
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from gevrey_feq import chebcore, cli, papersuite
from gevrey_feq.funexpr import evaluate
from gevrey_feq.solver import solve_neumann

EXAMPLE_IDS = (1, 2, 3, 4)


def rhs_rep(problem):
    return chebcore.interpolate(lambda x: np.broadcast_to(evaluate(problem.u, x), x.shape))


@pytest.fixture(scope="session")
def example1():
    return papersuite.paper_example(1)


@pytest.fixture(scope="session")
def example1_solution(example1):
    u = rhs_rep(example1)
    return solve_neumann(example1.op, u, 1e-11, 200, k_target=1.0, rhs=example1.u)


@pytest.fixture(scope="session")
def example3():
    return papersuite.paper_example(3)


def shipped_config(i):
    return resources.files("gevrey_feq") / "configs" / f"example{i}.json"


@pytest.fixture(scope="session")
def shipped_runs(tmp_path_factory):
    """Every shipped example solved twice through the CLI: ``{id: [(code, report), ...]}``."""
    runs = {}
    for i in EXAMPLE_IDS:
        runs[i] = []
        for rep in range(2):
            out = tmp_path_factory.mktemp(f"ex{i}_run{rep}")
            code = cli.main(["solve", "--config", str(shipped_config(i)), "--out", str(out)])
            runs[i].append((code, out))
    return runs


def read_report(out: Path):
    return json.loads((Path(out) / "report.json").read_text())


# ---------------------------------------------------------------- acceptance reporting

SUITE_BUDGET_S = 30.0
ACCEPTANCE: dict[str, list[bool]] = {}


def record(criterion: str, ok: bool) -> None:
    ACCEPTANCE.setdefault(criterion, []).append(ok)


def pytest_sessionstart(session):
    session.config._suite_t0 = time.perf_counter()


def _suite_elapsed(config):
    return time.perf_counter() - getattr(config, "_suite_t0", time.perf_counter())


def pytest_sessionfinish(session, exitstatus):
    # the runtime half of criterion 9 applies to the whole suite, so only full runs are gated
    elapsed = _suite_elapsed(session.config)
    session.config._suite_elapsed = elapsed
    full_run = session.testscollected >= 300
    if full_run:
        record("9b suite runtime < 30 s", elapsed < SUITE_BUDGET_S)
        if elapsed >= SUITE_BUDGET_S and exitstatus == 0:
            session.exitstatus = 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=_criterion_key):
        verdict = "PASS" if all(ACCEPTANCE[name]) else "FAIL"
        terminalreporter.write_line(f"{verdict}  criterion {name}")
    elapsed = getattr(config, "_suite_elapsed", None)
    if elapsed is not None:
        terminalreporter.write_line(f"suite wall time {elapsed:.1f} s")


def _criterion_key(name):
    head = name.split()[0]
    digits = "".join(ch for ch in head if ch.isdigit())
    return (int(digits), head)
