"""Run records, content-addressed results and export bundles.

Every analysis result is written once under ``results/<result_hash>/``
and tied to exactly one immutable run record carrying the operation
name, canonical parameters and the hashes of its inputs. Replaying a
record with the same seeded operation must land on the same result
hash, which is what makes workflows documentable and cacheable.
"""

from __future__ import annotations

import datetime as dt
import json
import shutil
import uuid
import zipfile
from dataclasses import dataclass
from pathlib import Path

from .errors import NotFound
from .hashing import content_hash
from .store import Database

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS run_records (
    id            TEXT PRIMARY KEY,
    collection_id TEXT,
    operation     TEXT NOT NULL,
    params_json   TEXT NOT NULL,
    param_hash    TEXT NOT NULL,
    inputs_json   TEXT NOT NULL,
    result_hash   TEXT,
    created_at    TEXT NOT NULL,
    user          TEXT NOT NULL DEFAULT 'local'
);
CREATE INDEX IF NOT EXISTS idx_run_records_result ON run_records(result_hash);
CREATE INDEX IF NOT EXISTS idx_run_records_cache
    ON run_records(operation, param_hash);
"""


@dataclass(frozen=True)
class RunRecord:
    id: str
    collection_id: str | None
    operation: str
    parameters: dict
    param_hash: str
    input_hashes: list[str]
    result_hash: str | None
    created_at: str
    user: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "collection_id": self.collection_id,
            "operation": self.operation,
            "parameters": self.parameters,
            "param_hash": self.param_hash,
            "input_hashes": self.input_hashes,
            "result_hash": self.result_hash,
            "created_at": self.created_at,
            "user": self.user,
        }


class RunLedger:
    def __init__(self, db: Database):
        self.db = db
        db.executescript(_SCHEMA_SQL)

    def record(
        self,
        operation: str,
        parameters: dict,
        input_hashes: list[str] | None = None,
        result_hash: str | None = None,
        collection_id: str | None = None,
        user: str = "local",
    ) -> RunRecord:
        run = RunRecord(
            id=f"run-{uuid.uuid4().hex[:12]}",
            collection_id=collection_id,
            operation=operation,
            parameters=parameters,
            param_hash=content_hash(parameters),
            input_hashes=list(input_hashes or []),
            result_hash=result_hash,
            created_at=dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            user=user,
        )
        with self.db.transaction() as db:
            db.execute(
                "INSERT INTO run_records(id,collection_id,operation,params_json,"
                "param_hash,inputs_json,result_hash,created_at,user) "
                "VALUES(?,?,?,?,?,?,?,?,?)",
                (run.id, run.collection_id, run.operation,
                 json.dumps(run.parameters, sort_keys=True),
                 run.param_hash, json.dumps(run.input_hashes),
                 run.result_hash, run.created_at, run.user),
            )
        return run

    def get(self, run_id: str) -> RunRecord:
        rows = self.db.query("SELECT * FROM run_records WHERE id=?", (run_id,))
        if not rows:
            raise NotFound(f"run record {run_id!r}")
        return self._from_row(rows[0])

    @staticmethod
    def _from_row(r) -> RunRecord:
        return RunRecord(
            id=r["id"], collection_id=r["collection_id"], operation=r["operation"],
            parameters=json.loads(r["params_json"]), param_hash=r["param_hash"],
            input_hashes=json.loads(r["inputs_json"]), result_hash=r["result_hash"],
            created_at=r["created_at"], user=r["user"],
        )

    def by_result(self, result_hash: str) -> RunRecord | None:
        rows = self.db.query(
            "SELECT * FROM run_records WHERE result_hash=? ORDER BY created_at LIMIT 1",
            (result_hash,),
        )
        return self._from_row(rows[0]) if rows else None

    def cached_result(
        self, operation: str, param_hash: str, input_hashes: list[str]
    ) -> RunRecord | None:
        """An earlier record with identical operation, parameters and inputs."""
        rows = self.db.query(
            "SELECT * FROM run_records WHERE operation=? AND param_hash=? "
            "AND result_hash IS NOT NULL ORDER BY created_at",
            (operation, param_hash),
        )
        for r in rows:
            if json.loads(r["inputs_json"]) == input_hashes:
                return self._from_row(r)
        return None

    def provenance_chain(self, result_hash: str) -> list[RunRecord]:
        """Records from the earliest input to the record producing the result."""
        chain: list[RunRecord] = []
        seen: set[str] = set()

        def visit(h: str) -> None:
            record = self.by_result(h)
            if record is None or record.id in seen:
                return
            seen.add(record.id)
            for input_hash in record.input_hashes:
                visit(input_hash)
            chain.append(record)

        visit(result_hash)
        if not chain:
            raise NotFound(f"no run record produced result {result_hash!r}")
        return chain

    def all_records(self) -> list[RunRecord]:
        return [self._from_row(r) for r in
                self.db.query("SELECT * FROM run_records ORDER BY created_at, id")]


class ResultStore:
    """Content-addressed result directory: results/<result_hash>/payload.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, result_hash: str) -> Path:
        return self.root / result_hash

    def exists(self, result_hash: str) -> bool:
        return (self.path(result_hash) / "payload.json").is_file()

    def write(self, payload: dict, extra_files: dict[str, bytes] | None = None) -> str:
        """Persist a payload atomically; the hash of the payload is the id."""
        result_hash = content_hash(payload)
        final = self.path(result_hash)
        if self.exists(result_hash):
            return result_hash
        tmp = self.root / f".tmp-{uuid.uuid4().hex[:8]}"
        tmp.mkdir(parents=True)
        try:
            with open(tmp / "payload.json", "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
            for name, data in (extra_files or {}).items():
                with open(tmp / name, "wb") as fh:
                    fh.write(data)
            tmp.rename(final)
        except OSError:
            shutil.rmtree(tmp, ignore_errors=True)
            if not self.exists(result_hash):
                raise
        return result_hash

    def read(self, result_hash: str) -> dict:
        p = self.path(result_hash) / "payload.json"
        if not p.is_file():
            raise NotFound(f"result {result_hash!r}")
        with open(p, encoding="utf-8") as fh:
            return json.load(fh)

    def files(self, result_hash: str) -> list[Path]:
        d = self.path(result_hash)
        if not d.is_dir():
            raise NotFound(f"result {result_hash!r}")
        return sorted(p for p in d.iterdir() if p.is_file())


def export_bundle(
    ledger: RunLedger, results: ResultStore, result_hash: str, out_path: str | Path
) -> Path:
    """ZIP with the result files, its run-record chain and a manifest."""
    chain = ledger.provenance_chain(result_hash)
    out_path = Path(out_path)
    manifest = {
        "result_hash": result_hash,
        "records": [r.to_dict() for r in chain],
        "files": [],
    }
    with zipfile.ZipFile(out_path, "w", zipfile.ZIP_DEFLATED) as zf:
        for rec in chain:
            if rec.result_hash and results.exists(rec.result_hash):
                for f in results.files(rec.result_hash):
                    arcname = f"results/{rec.result_hash}/{f.name}"
                    zf.write(f, arcname)
                    if rec.result_hash == result_hash:
                        manifest["files"].append(arcname)
        zf.writestr("manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
    return out_path


def import_bundle(
    ledger: RunLedger, results: ResultStore, bundle_path: str | Path
) -> str:
    """Restore a bundle; returns the re-verified result hash.

    Payloads are re-hashed on import, so any tampering with the archived
    parameters or results shows up as a hash mismatch.
    """
    with zipfile.ZipFile(bundle_path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        for record in manifest["records"]:
            rh = record.get("result_hash")
            if not rh:
                continue
            payload_name = f"results/{rh}/payload.json"
            if payload_name not in zf.namelist():
                continue
            payload = json.loads(zf.read(payload_name))
            recomputed = content_hash(payload)
            if recomputed != rh:
                raise ValueError(
                    f"bundle result {rh} re-hashes to {recomputed}; archive corrupted"
                )
            extra = {}
            prefix = f"results/{rh}/"
            for name in zf.namelist():
                if name.startswith(prefix) and name != payload_name:
                    extra[name[len(prefix):]] = zf.read(name)
            results.write(payload, extra)
            existing = ledger.by_result(rh)
            if existing is None:
                ledger.record(
                    operation=record["operation"],
                    parameters=record["parameters"],
                    input_hashes=record["input_hashes"],
                    result_hash=rh,
                    collection_id=record.get("collection_id"),
                    user=record.get("user", "local"),
                )
    return manifest["result_hash"]
