"""Project directory and append-only run manifest.

Layout created by init_project:

    corpus/  splits/  jobs/  predictions/  reports/  manifest.json
"""

import copy
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Tuple

PROJECT_DIRS = ("corpus", "splits", "jobs", "predictions", "reports")
MANIFEST_NAME = "manifest.json"


class ProjectError(Exception):
    """Project directory is missing, not empty, or its manifest is unreadable."""


class StageError(ProjectError):
    """A stage was recorded twice."""


class MissingStageError(ProjectError):
    """A prerequisite stage has not been recorded yet."""

    def __init__(self, stage):
        super().__init__(f"stage '{stage}' has not been recorded")
        self.stage = stage


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    created_at: str
    # ((stage name, payload), ...) in recording order.
    stages: Tuple[Tuple[str, dict], ...] = ()

    def has(self, stage):
        return any(name == stage for name, _ in self.stages)

    def stage(self, stage):
        """Payload of a recorded stage. Raises MissingStageError otherwise."""
        for name, payload in self.stages:
            if name == stage:
                return copy.deepcopy(payload)
        raise MissingStageError(stage)

    @property
    def corpus_fingerprint(self):
        return self.stage("ingest")["corpus_fingerprint"] if self.has("ingest") else None

    def to_dict(self):
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "stages": {name: payload for name, payload in self.stages},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["run_id"], data["created_at"], tuple(data.get("stages", {}).items()))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def record_stage(manifest, stage, payload):
    """New manifest with the stage appended. Earlier stages are carried over untouched.

    Raises:
        StageError: the stage is already recorded.
    """
    if manifest.has(stage):
        raise StageError(f"stage '{stage}' is already recorded in run {manifest.run_id}")
    # Round-trip through JSON so the payload is detached and serializable.
    detached = json.loads(json.dumps(payload, ensure_ascii=False))
    return RunManifest(manifest.run_id, manifest.created_at, manifest.stages + ((stage, detached),))


class Project(object):
    def __init__(self, path):
        self.path = Path(path)

    @property
    def manifest_path(self):
        return self.path / MANIFEST_NAME

    def dir(self, name):
        return self.path / name

    @property
    def run_id(self):
        return self.load_manifest().run_id

    def load_manifest(self):
        if not self.manifest_path.exists():
            raise MissingStageError("init")
        try:
            with open(self.manifest_path, encoding="utf-8") as manifest_file:
                return RunManifest.from_dict(json.load(manifest_file))
        except (OSError, ValueError, KeyError) as e:
            raise ProjectError(f"unreadable manifest {self.manifest_path}: {e}") from e

    def save_manifest(self, manifest):
        """Write manifest.json atomically (temp file in the same directory, then rename)."""
        write_atomic(self.manifest_path, manifest.to_json())

    def record(self, stage, payload):
        """Load, append a stage and save. Returns the new manifest."""
        manifest = record_stage(self.load_manifest(), stage, payload)
        self.save_manifest(manifest)
        logging.info(f"Recorded stage '{stage}' in {self.manifest_path}")
        return manifest


def write_atomic(path, text):
    path = Path(path)
    fd, temp_path = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as temp_file:
            temp_file.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def read_artifact(path, parse=None):
    """Read a UTF-8 project artifact, optionally parsing its text.

    Raises:
        ProjectError: the file is missing, unreadable or does not parse.
    """
    try:
        with open(path, encoding="utf-8") as artifact_file:
            text = artifact_file.read()
        return parse(text) if parse else text
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ProjectError(f"cannot read {path}: {e!r}") from e


def init_project(path, run_id=None, config=None):
    """Create a project directory.

    Args:
        path: absent or empty directory.
        run_id: defaults to the directory name.
        config: effective configuration dict, recorded as the 'init' stage.

    Raises:
        ProjectError: path exists and is not an empty directory.
    """
    path = Path(path)
    if path.exists() and (not path.is_dir() or any(path.iterdir())):
        raise ProjectError(f"{path} exists and is not an empty directory")
    path.mkdir(parents=True, exist_ok=True)
    for name in PROJECT_DIRS:
        (path / name).mkdir()
    manifest = RunManifest(
        run_id or path.resolve().name,
        datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
    )
    manifest = record_stage(manifest, "init", {"config": config or {}})
    project = Project(path)
    project.save_manifest(manifest)
    logging.info(f"Initialized project {path} (run {manifest.run_id})")
    return project
