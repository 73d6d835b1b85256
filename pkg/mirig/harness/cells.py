import asyncio
from typing import Callable, Sequence, TypeVar

from mirig.config import HarnessSettings
from mirig.logger import LOGGER

T = TypeVar("T")


async def _gather_cells(cells: Sequence[Callable[[], T]], threads: int) -> list[T]:
    limit = asyncio.Semaphore(threads)

    async def run(index: int, cell: Callable[[], T]) -> T:
        async with limit:
            LOGGER.debug(f"Starting sweep cell {index + 1}/{len(cells)}")
            return await asyncio.to_thread(cell)

    return await asyncio.gather(*(run(i, cell) for i, cell in enumerate(cells)))


def run_cells(
    cells: Sequence[Callable[[], T]],
    threads: int | None = None,
) -> list[T]:
    """
    Run independent sweep cells on up to `threads` worker threads (default
    MIRIG_THREADS). Results come back in cell order whatever order they finish in.

    """
    threads = HarnessSettings().threads if threads is None else threads
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    if threads == 1:
        return [cell() for cell in cells]
    LOGGER.info(f"Running {len(cells)} sweep cells on {threads} threads")
    return asyncio.run(_gather_cells(cells, threads))
