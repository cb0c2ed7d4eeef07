"""Read-only access to a pipeline run directory through its manifest."""

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, MissingInput


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class RunManifest:
    """Artifact lookup with checksum validation against manifest.json."""

    def __init__(self, manifest_path):
        self.path = Path(manifest_path)
        if not self.path.exists():
            raise MissingInput(f"manifest not found: {self.path}")
        with open(self.path) as fh:
            data = json.load(fh)
        self.config_hash = data.get("config_hash", "")
        self.artifacts = data.get("artifacts", {})
        self.base_dir = self.path.parent

    def artifact_path(self, name: str) -> Path:
        if name not in self.artifacts:
            raise MissingInput(
                f"artifact {name!r} not in manifest {self.path}; "
                f"available: {sorted(self.artifacts)}")
        entry = self.artifacts[name]
        path = self.base_dir / entry["path"]
        if not path.exists():
            raise MissingInput(f"artifact file missing on disk: {path}")
        digest = _sha256(path)
        if digest != entry["sha256"]:
            raise ChecksumMismatch(
                f"{path}: sha256 {digest} does not match manifest "
                f"{entry['sha256']}")
        return path

    def load_csv(self, name: str) -> np.ndarray:
        """Artifact as a 2D float array (header skipped)."""
        return np.loadtxt(self.artifact_path(name), delimiter=",",
                          skiprows=1, ndmin=2)
