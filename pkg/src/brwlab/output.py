"""Output files and the run manifest."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass, field

from brwlab import __version__


def fmt(v) -> str:
    return format(float(v), ".17g")


@dataclass
class RunManifest:
    params: dict | None
    command: str
    seed: int | None
    config: dict
    tolerances: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "tolerances": self.tolerances,
            "timestamp": self.timestamp,
            "outputs": self.outputs,
            "config": self.config,
        }


class OutputDir:
    """Collects files written for one command and records them in the manifest."""

    def __init__(self, path: str | None):
        self.path = path
        self.files: list[dict] = []
        if path:
            os.makedirs(path, exist_ok=True)

    @property
    def enabled(self) -> bool:
        return self.path is not None

    def write(self, name: str, text: str) -> str | None:
        if not self.path:
            return None
        full = os.path.join(self.path, name)
        data = text.encode("utf-8")
        with open(full, "wb") as fh:
            fh.write(data)
        self.files.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})
        return full

    def write_manifest(self, manifest: RunManifest) -> str | None:
        if not self.path:
            return None
        manifest.outputs = list(self.files)
        full = os.path.join(self.path, "manifest.json")
        with open(full, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return full
