import hashlib
import json
import threading
from contextlib import contextmanager
from typing import Any

from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeRemainingColumn,
)

from mirig.logger import CONSOLE

# Rich allows one live display at a time; nested or concurrent bars run silently
_LIVE_DISPLAY = threading.Lock()


@contextmanager
def progress_bar(
    description: str = "Processing",
    total: int | None = None,
):
    owns_display = _LIVE_DISPLAY.acquire(blocking=False)
    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[bold blue]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            TextColumn("•"),
            TimeRemainingColumn(),
            console=CONSOLE,
            transient=True,
            disable=not owns_display,
        ) as progress:
            task = progress.add_task(description, total=total)
            yield (progress, task)
    finally:
        if owns_display:
            _LIVE_DISPLAY.release()


def canonical_json(payload: Any) -> str:
    """
    Serialize `payload` with sorted keys and no insignificant whitespace, so equal
    payloads always produce equal bytes.

    """
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def content_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
