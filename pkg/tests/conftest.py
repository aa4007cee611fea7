import time
from pathlib import Path

import pytest

from _acceptance import summary_lines


def pytest_terminal_summary(terminalreporter):
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """Default-config generate, train and eval through the CLI commands, timed."""
    from ledft.cli import cmd_eval, cmd_generate, cmd_train
    from ledft.config import RunConfig

    root = tmp_path_factory.mktemp("default_run")
    data, model, report = root / "data", root / "model.json", root / "report"
    timings = {}
    start = time.perf_counter()
    manifest = cmd_generate(RunConfig(), data)
    timings["generate"] = time.perf_counter() - start
    t0 = time.perf_counter()
    trained = cmd_train(data, model)
    timings["train"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    metrics = cmd_eval(data, model, report)
    timings["eval"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - start
    return {
        "root": Path(root),
        "data": data,
        "model_path": model,
        "report_dir": report,
        "manifest": manifest,
        "model": trained,
        "metrics": metrics,
        "timings": timings,
    }
