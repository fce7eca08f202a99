import shutil
from pathlib import Path

import pytest

from decomp_refine.corpus import ToolchainConfig

HAVE_TOOLCHAIN = shutil.which("gcc") is not None and shutil.which("objdump") is not None
needs_toolchain = pytest.mark.skipif(not HAVE_TOOLCHAIN, reason="gcc/objdump not installed")

_criteria: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by this test")


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _criteria.setdefault(label, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0][2:])):
        outcomes = _criteria[label]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        tr.write_line(f"{verdict}  {label}")


@pytest.fixture(scope="session")
def toolchain(tmp_path_factory):
    if not HAVE_TOOLCHAIN:
        pytest.skip("gcc/objdump not installed")
    return ToolchainConfig(workspace_root=str(tmp_path_factory.mktemp("ws")))


@pytest.fixture(scope="session")
def demo_dir(toolchain, tmp_path_factory) -> dict:
    from decomp_refine.demo import prepare_demo

    return prepare_demo(tmp_path_factory.mktemp("demo"), toolchain)


@pytest.fixture(scope="session")
def mini_run(demo_dir, toolchain):
    """Records for the three path modes over the mock mini-benchmark."""
    from decomp_refine.backend import FixtureBackend
    from decomp_refine.corpus import load_samples
    from decomp_refine.harness import RunConfig, evaluate_benchmark

    samples = load_samples(demo_dir["samples"])
    backend = FixtureBackend(demo_dir["fixtures"])
    runs = {
        mode: evaluate_benchmark(samples, backend, backend, toolchain, RunConfig(workers=8), mode=mode)
        for mode in ("ddpf", "sem", "syn")
    }
    return samples, runs
