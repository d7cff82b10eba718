# core/manifest.py
"""
Manifest por corrida (config, semilla, versiones, tiempos, consultas al gemelo,
sha256 de entradas y salidas) + registro en la base de corridas.
"""
import hashlib
import json
import logging
import platform
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from database import session_scope
from models import Run, RunOutput
from schemas.reports import OutputFile, RunManifest

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("numpy", "scipy", "shapely", "pydantic", "pydantic-settings", "sqlalchemy")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> Dict[str, str]:
    out = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = "?"
    return out


def _files(paths: Sequence[str | Path], out_dir: Path) -> List[OutputFile]:
    files = []
    for p in paths:
        p = Path(p)
        try:
            shown = str(p.resolve().relative_to(out_dir.resolve()))
        except ValueError:
            shown = str(p)
        files.append(OutputFile(path=shown, sha256=sha256_file(p)))
    return files


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    outputs: Sequence[str | Path],
    inputs: Sequence[str | Path] = (),
    seed: Optional[int] = None,
    arguments: Optional[dict] = None,
    timings: Optional[Dict[str, float]] = None,
    drt_queries: Optional[Dict[str, int]] = None,
    metrics: Optional[dict] = None,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        seed=seed,
        config=config,
        arguments=arguments or {},
        inputs=_files(inputs, out),
        outputs=_files(outputs, out),
        versions=versions(),
        timings=timings or {},
        drt_queries=drt_queries or {},
        metrics=metrics or {},
    )
    path = out / f"manifest-{command}.json"
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("manifest: %s", path)

    record_run(out, manifest, path)
    return path


def record_run(out_dir: str | Path, manifest: RunManifest, manifest_path: Path) -> int:
    with session_scope(out_dir) as db:
        run = Run(
            command=manifest.command,
            seed=manifest.seed,
            config_json=json.dumps(manifest.config, sort_keys=True),
            metrics_json=json.dumps(manifest.metrics, sort_keys=True),
            drt_queries=sum(manifest.drt_queries.values()),
            wall_time_s=manifest.timings.get("total_s"),
            manifest_path=str(manifest_path),
        )
        run.outputs = [RunOutput(path=o.path, sha256=o.sha256) for o in manifest.outputs]
        db.add(run)
        db.commit()
        db.refresh(run)
        return run.id


def list_runs(out_dir: str | Path) -> List[Run]:
    with session_scope(out_dir) as db:
        runs = db.query(Run).order_by(Run.id.asc()).all()
        for r in runs:
            _ = list(r.outputs)
        db.expunge_all()
        return runs
