import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.console import Console
from rich.logging import RichHandler

CONSOLE = Console(stderr=True)

# Label of the run or sweep cell the current thread or task is working on
_RUN_CONTEXT: ContextVar[str] = ContextVar("mirig_run_context", default="")


class LogSettings(BaseSettings):
    """
    `MIRIG_LOG_LEVEL` picks the level; unknown names fall back to INFO.
    """

    model_config = SettingsConfigDict(env_prefix="MIRIG_LOG_")

    level: str = "INFO"

    @property
    def numeric_level(self) -> int:
        return logging.getLevelNamesMapping().get(self.level.upper(), logging.INFO)


class RunContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        context = _RUN_CONTEXT.get()
        record.run = f"[{context}] " if context else ""
        return True


@contextmanager
def log_context(label: str) -> Iterator[None]:
    """
    Prefix every record logged inside the block with `label`. Nested blocks
    join their labels with '/'. Sweep cells running on worker threads inherit
    the label of the task that started them.

    """
    parent = _RUN_CONTEXT.get()
    token = _RUN_CONTEXT.set(f"{parent}/{label}" if parent else label)
    try:
        yield
    finally:
        _RUN_CONTEXT.reset(token)


def configure_logger(settings: LogSettings | None = None) -> logging.Logger:
    settings = settings or LogSettings()

    handler = RichHandler(console=CONSOLE, show_path=False, markup=False)
    handler.setFormatter(logging.Formatter("%(run)s%(message)s"))
    handler.addFilter(RunContextFilter())

    logger = logging.getLogger("mirig")
    logger.handlers = [handler]
    logger.filters = [RunContextFilter()]
    logger.setLevel(settings.numeric_level)

    return logger


LOGGER = configure_logger()
