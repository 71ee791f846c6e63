import time

import pytest

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> str:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return line


@pytest.fixture(scope="session")
def default_sweep(tmp_path_factory):
    from nfhomog.experiment import default_config, run_sweep, write_sweep
    t0 = time.perf_counter()
    res = run_sweep(default_config())
    res.elapsed = time.perf_counter() - t0
    out = tmp_path_factory.mktemp("default_sweep")
    write_sweep(res, out, dump_fields=False)
    res.out = out
    return res


@pytest.fixture(scope="session")
def control_sweep():
    from nfhomog.experiment import control_config, run_sweep
    t0 = time.perf_counter()
    res = run_sweep(control_config())
    res.elapsed = time.perf_counter() - t0
    return res


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
