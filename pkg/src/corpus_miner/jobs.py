"""In-process job queue with a bounded worker pool.

Operations are registered callables taking (workspace, params) and
returning a JSON payload. A finished job's payload lands in the result
store before the job flips to done, so a crash mid-run leaves no partial
result visible. Identical submissions (operation, parameter hash, input
hashes) are served from cache under a fresh run record.
"""

from __future__ import annotations

import datetime as dt
import logging
import threading
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import NotFound, ValidationError
from .hashing import content_hash

logger = logging.getLogger(__name__)

STATUSES = ("queued", "running", "done", "failed")


@dataclass
class Job:
    id: str
    operation: str
    parameters: dict
    status: str = "queued"
    progress: float = 0.0
    result_hash: str | None = None
    error: str | None = None
    cached: bool = False
    run_id: str | None = None
    submitted_at: str = ""
    finished_at: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "operation": self.operation,
            "parameters": self.parameters,
            "status": self.status,
            "progress": self.progress,
            "result_hash": self.result_hash,
            "error": self.error,
            "cached": self.cached,
            "run_id": self.run_id,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
        }


@dataclass
class Operation:
    name: str
    handler: object                       # callable(workspace, params) -> dict payload
    validator: object = None              # callable(params) -> None, raises ValidationError
    input_hashes: object = None           # callable(workspace, params) -> list[str]
    collection_of: object = None          # callable(params) -> collection id or None
    pure: bool = True                     # False for handlers with side effects


class JobManager:
    def __init__(self, workspace, workers: int = 2):
        self.workspace = workspace
        self.operations: dict[str, Operation] = {}
        self.jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max(1, workers))

    def register(self, op: Operation) -> None:
        self.operations[op.name] = op

    def _job(self, job_id: str) -> Job:
        with self._lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise NotFound(f"job {job_id!r}")
        return job

    def submit(self, operation: str, parameters: dict) -> Job:
        op = self.operations.get(operation)
        if op is None:
            raise ValidationError(f"unknown operation {operation!r}", ["operation"])
        if op.validator is not None:
            op.validator(parameters)

        job = Job(
            id=f"job-{uuid.uuid4().hex[:12]}",
            operation=operation,
            parameters=parameters,
            submitted_at=dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        )
        with self._lock:
            self.jobs[job.id] = job

        input_hashes = op.input_hashes(self.workspace, parameters) if op.input_hashes else []
        collection_id = op.collection_of(parameters) if op.collection_of else None
        cached = (
            self.workspace.ledger.cached_result(
                operation, content_hash(parameters), input_hashes
            )
            if op.pure
            else None
        )
        if cached is not None and self.workspace.results.exists(cached.result_hash):
            # cache hit still gets its own run record for the research log
            run = self.workspace.ledger.record(
                operation, parameters, input_hashes, cached.result_hash,
                collection_id=collection_id,
            )
            job.status = "done"
            job.progress = 1.0
            job.cached = True
            job.result_hash = cached.result_hash
            job.run_id = run.id
            job.finished_at = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
            return job

        self._pool.submit(self._run, job.id, op, input_hashes, collection_id)
        return job

    def _run(self, job_id: str, op: Operation, input_hashes: list[str],
             collection_id: str | None) -> None:
        job = self._job(job_id)
        job.status = "running"
        job.progress = 0.1
        try:
            payload = op.handler(self.workspace, job.parameters)
            result_hash = self.workspace.results.write(payload)
            run = self.workspace.ledger.record(
                op.name, job.parameters, input_hashes, result_hash,
                collection_id=collection_id,
            )
            job.result_hash = result_hash
            job.run_id = run.id
            job.progress = 1.0
            job.status = "done"
        except Exception as exc:  # failure is a terminal job state, not a crash
            logger.error("job %s failed: %s", job_id, exc)
            logger.debug("%s", traceback.format_exc())
            job.error = str(exc)
            job.status = "failed"
        finally:
            job.finished_at = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")

    def poll(self, job_id: str) -> Job:
        return self._job(job_id)

    def result(self, job_id: str) -> dict:
        job = self._job(job_id)
        if job.status != "done" or job.result_hash is None:
            raise NotFound(f"job {job_id!r} has no result (status {job.status})")
        return self.workspace.results.read(job.result_hash)

    def wait(self, job_id: str, timeout: float = 600.0, poll_interval: float = 0.05) -> Job:
        """Block until the job reaches a terminal state (for CLI use)."""
        import time
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self._job(job_id)
            if job.status in ("done", "failed"):
                return job
            time.sleep(poll_interval)
        raise TimeoutError(f"job {job_id!r} still {self._job(job_id).status}")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
