from __future__ import annotations

import asyncio
import json
import logging
from typing import Any, Sequence, Union

import aiosqlite
from pydantic import BaseModel

logger = logging.getLogger(__name__)

SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,
    config TEXT NOT NULL,
    result TEXT NOT NULL,
    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);
"""

Result = Union[BaseModel, Sequence[BaseModel]]


def _dump(result: Result) -> str:
    if isinstance(result, BaseModel):
        return result.model_dump_json()
    return json.dumps([r.model_dump(mode="json") for r in result])


class RunStore:
    """SQLite archive of experiment configs and their results."""

    def __init__(self, db_path: str = "lrca_runs.db") -> None:
        self.db_path = db_path
        self._db: aiosqlite.Connection | None = None

    async def init(self) -> None:
        self._db = await aiosqlite.connect(self.db_path)
        await self._db.executescript(SCHEMA)
        await self._db.commit()

    async def close(self) -> None:
        if self._db:
            await self._db.close()
            self._db = None

    async def save_run(self, command: str, config: BaseModel, result: Result) -> int:
        cursor = await self._db.execute(
            "INSERT INTO runs (command, config, result) VALUES (?, ?, ?)",
            (command, config.model_dump_json(), _dump(result)),
        )
        await self._db.commit()
        logger.debug("archived %s run %d", command, cursor.lastrowid)
        return cursor.lastrowid

    async def load_run(self, run_id: int) -> dict[str, Any] | None:
        """Stored run as plain JSON data. Returns None for an unknown id."""
        cursor = await self._db.execute(
            "SELECT id, command, config, result, created_at FROM runs WHERE id = ?", (run_id,)
        )
        row = await cursor.fetchone()
        if row is None:
            return None
        return {
            "id": row[0],
            "command": row[1],
            "config": json.loads(row[2]),
            "result": json.loads(row[3]),
            "created_at": row[4],
        }

    async def list_runs(self, limit: int = 100) -> list[dict[str, Any]]:
        """Most recent runs first, without their results."""
        cursor = await self._db.execute(
            "SELECT id, command, config FROM runs ORDER BY id DESC LIMIT ?", (limit,)
        )
        rows = await cursor.fetchall()
        return [{"id": r[0], "command": r[1], "config": json.loads(r[2])} for r in rows]


def archive_run(db_path: str, command: str, config: BaseModel, result: Result) -> int:
    """Blocking wrapper used by the CLI."""

    async def run() -> int:
        store = RunStore(db_path)
        await store.init()
        try:
            return await store.save_run(command, config, result)
        finally:
            await store.close()

    return asyncio.run(run())
