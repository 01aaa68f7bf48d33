"""Run configuration: one TOML file capturing every knob of a pipeline run.

The config hash stamped into every output file covers only fields that can
change results (backend, layer, prompt, calibration, rerank, adapter,
dataset), so artifact caches invalidate exactly when they should.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backends import MockBackend, ToyBackend
from .backends.remote import RemoteBackend
from .errors import ConfigError
from .rerank import RerankConfig
from .retrieval import CalibrationConfig, Direction

DEFAULT_LAYER = 24          # zero-shot readout layer, clamped to backend depth
DEFAULT_FPS = 2.0
DEFAULT_MAX_FRAMES = 180


def resolve_layer(layer: int | None, num_layers: int) -> int:
    """Explicit layer wins; otherwise the default readout layer, clamped for
    shallow backends."""
    if layer is not None:
        return layer
    return min(DEFAULT_LAYER, num_layers - 1)


@dataclass
class BackendConfig:
    kind: str = "toy"            # mock | toy | remote
    seed: int = 0
    endpoint: str | None = None

    def build(self):
        if self.kind == "mock":
            return MockBackend(seed=self.seed)
        if self.kind == "toy":
            return ToyBackend(seed=self.seed)
        if self.kind == "remote":
            if not self.endpoint:
                raise ConfigError("remote backend requires an endpoint")
            return RemoteBackend(self.endpoint)
        raise ConfigError(f"unknown backend kind {self.kind!r}")


@dataclass
class RunConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    dataset: str = ""
    direction: Direction = Direction.T2V
    layer: int | None = None
    prompt_prefixed: bool = False
    paragraph: bool = False
    fps: float = DEFAULT_FPS
    max_frames: int = DEFAULT_MAX_FRAMES
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    rerank: RerankConfig | None = None
    adapter_path: str | None = None
    output_dir: str = "out"

    def validate(self) -> None:
        if not self.dataset:
            raise ConfigError("config must name a dataset manifest")
        if not Path(self.dataset).exists():
            raise ConfigError(f"dataset file not found: {self.dataset}")
        if self.adapter_path and not Path(self.adapter_path).exists():
            raise ConfigError(f"adapter file not found: {self.adapter_path}")

    def hash_fields(self) -> dict:
        return {
            "backend": {"kind": self.backend.kind, "seed": self.backend.seed,
                        "endpoint": self.backend.endpoint},
            "dataset": self.dataset,
            "direction": self.direction.value,
            "layer": self.layer,
            "prompt_prefixed": self.prompt_prefixed,
            "paragraph": self.paragraph,
            "fps": self.fps,
            "max_frames": self.max_frames,
            "calibration": {
                "enabled": self.calibration.enabled,
                "t2v": self.calibration.temperature_t2v,
                "v2t": self.calibration.temperature_v2t,
            },
            "rerank_k": self.rerank.k if self.rerank else None,
            "adapter": _file_digest(self.adapter_path) if self.adapter_path else None,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.hash_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None

    cfg = RunConfig()
    b = raw.get("backend", {})
    cfg.backend = BackendConfig(
        kind=b.get("kind", "toy"), seed=int(b.get("seed", 0)), endpoint=b.get("endpoint")
    )
    d = raw.get("dataset", {})
    cfg.dataset = d.get("manifest", "")
    cfg.paragraph = bool(d.get("paragraph", False))
    e = raw.get("eval", {})
    try:
        cfg.direction = Direction(e.get("direction", "t2v"))
    except ValueError:
        raise ConfigError(f"unknown direction {e.get('direction')!r}") from None
    if "layer" in e:
        cfg.layer = int(e["layer"])
    cfg.prompt_prefixed = bool(e.get("prompt_prefixed", False))
    cfg.fps = float(e.get("fps", DEFAULT_FPS))
    cfg.max_frames = int(e.get("max_frames", DEFAULT_MAX_FRAMES))
    c = raw.get("calibration", {})
    cfg.calibration = CalibrationConfig(
        enabled=bool(c.get("enabled", False)),
        temperature_t2v=float(c.get("temperature_t2v", 1.0)),
        temperature_v2t=float(c.get("temperature_v2t", 1.0)),
    )
    r = raw.get("rerank", {})
    if r.get("enabled", False):
        cfg.rerank = RerankConfig(k=int(r.get("k", 100)))
    cfg.adapter_path = raw.get("adapter", {}).get("path")
    cfg.output_dir = raw.get("output", {}).get("dir", "out")
    return cfg
