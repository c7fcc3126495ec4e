"""Run context: output directory, seeds, phase timings and file inventory."""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional

from config import TOOL_VERSION
from export import write_json
from formatters import fmt_time
from runconfig import config_hash, seeds_of

log = logging.getLogger(__name__)


@dataclass
class RunManifest:
    """What a command produced and how long each phase took."""

    command: str
    config_hash: str
    tool_version: str
    seeds: Dict[str, int]
    outputs: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    interrupted: bool = False

    def as_record(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "seeds": self.seeds,
            "outputs": self.outputs,
            "timings_s": self.timings,
            "interrupted": self.interrupted,
        }


class RunContext:
    """
    Central context for one command invocation.

    Usage:
        ctx = RunContext("runs/hopf", doc, command="train")
        with ctx.phase("stage1"):
            ...
        ctx.record(write_json(ctx.path("result.json"), result))
        ctx.write_manifest()
    """

    def __init__(self, out_dir, config: Mapping, command: str = ""):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.command = command
        self.seeds = seeds_of(config)
        self.timings: Dict[str, float] = {}
        self.outputs: List[Path] = []
        self.interrupted = False
        self._stop = False

    def path(self, name: str) -> Path:
        """Path inside the output directory (parents created)."""
        p = self.out_dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def record(self, path: Optional[Path]) -> Optional[Path]:
        """Add a written file to the inventory."""
        if path is not None and Path(path) not in self.outputs:
            self.outputs.append(Path(path))
        return path

    @contextmanager
    def phase(self, name: str):
        """Time a block; timings accumulate per phase name."""
        log.info("%s: starting", name)
        start = time.monotonic()
        try:
            yield
        finally:
            elapsed = time.monotonic() - start
            self.timings[name] = self.timings.get(name, 0.0) + elapsed
            log.info("%s: done in %s", name, fmt_time(elapsed))

    def request_stop(self) -> None:
        self._stop = True

    def stop_requested(self) -> bool:
        return self._stop

    def manifest(self) -> RunManifest:
        existing = [p for p in self.outputs if p.exists()]
        return RunManifest(
            command=self.command,
            config_hash=config_hash(self.config),
            tool_version=TOOL_VERSION,
            seeds=dict(self.seeds),
            outputs=[str(p.relative_to(self.out_dir)) for p in existing],
            timings=dict(self.timings),
            interrupted=self.interrupted,
        )

    def write_manifest(self) -> Path:
        path = write_json(self.path("manifest.json"), self.manifest().as_record())
        log.info("wrote %d file(s) to %s", len(self.outputs) + 1, self.out_dir)
        return path
