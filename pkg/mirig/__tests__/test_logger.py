import logging
from functools import partial

import pytest

from mirig.harness import run_cells
from mirig.logger import LOGGER, LogSettings, log_context


def _mirig_runs(caplog: pytest.LogCaptureFixture) -> list[str]:
    return [record.run for record in caplog.records if record.name == "mirig"]


def test_log_context_prefixes_records(caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.INFO, logger="mirig"):
        with log_context("train ab12"):
            with log_context("cell 3"):
                LOGGER.info("inner")
            LOGGER.info("outer")
        LOGGER.info("bare")

    assert _mirig_runs(caplog) == ["[train ab12/cell 3] ", "[train ab12] ", ""]


def test_worker_threads_inherit_context(caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.INFO, logger="mirig"):
        with log_context("sweep"):
            run_cells([partial(LOGGER.info, f"cell {i}") for i in range(3)], threads=2)

    assert _mirig_runs(caplog) == ["[sweep] "] * 3


@pytest.mark.parametrize(
    "level,expected",
    [("DEBUG", logging.DEBUG), ("warning", logging.WARNING), ("LOUD", logging.INFO)],
    ids=["upper", "lower", "unknown"],
)
def test_level_from_environment(
    monkeypatch: pytest.MonkeyPatch, level: str, expected: int
) -> None:
    monkeypatch.setenv("MIRIG_LOG_LEVEL", level)
    assert LogSettings().numeric_level == expected
