"""Run configuration: a flat ``section.key = value`` text file.

Example::

    # GLPP on the bundled blobs
    dataset.kind = synthetic
    method.name = glpp
    method.beta = 10000
    protocol.scheme = leave-one-out
    protocol.dims = 1..7
    output = out/glpp

Blank lines and ``#`` comments are ignored. Relative paths resolve against
the directory holding the config file.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .evaluation import MethodConfig
from .graph import WeightScheme

DATASET_KINDS = ("csv", "image-tree", "synthetic", "synthetic-images")
FEATURE_KINDS = ("raw", "lbp")


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "synthetic"
    path: str | None = None
    resize: tuple[int, int] | None = None
    classes: int = 8
    per_class: int = 20
    dim: int = 16
    separation: float = 50.0
    spread: float = 1.0
    height: int = 12
    width: int = 10
    seed: int = 0


@dataclass(frozen=True)
class FeatureConfig:
    kind: str = "raw"
    block: int = 16
    overlap: float = 0.5


@dataclass(frozen=True)
class ProtocolConfig:
    scheme: str = "leave-one-out"
    k: int | None = None
    n: int | None = None
    seed: int = 0
    dims: tuple[int, ...] = tuple(range(1, 11))


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    method: MethodConfig = field(default_factory=MethodConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    output: str = "out"

    def to_dict(self) -> dict:
        return {
            "dataset": {**asdict(self.dataset),
                        "resize": list(self.dataset.resize) if self.dataset.resize else None},
            "features": asdict(self.features),
            "method": {
                "name": self.method.name,
                "scheme": self.method.scheme.to_dict(),
                "beta": self.method.beta,
                "supervised": self.method.supervised,
                "pca_ratio": self.method.pca_ratio,
                "classifier": self.method.resolved_classifier,
            },
            "protocol": {**asdict(self.protocol), "dims": list(self.protocol.dims)},
            "output": self.output,
        }


def parse_dims(text: str) -> tuple[int, ...]:
    """``1..10``, ``1..50..5`` (with step) or ``1,2,5``."""
    text = text.strip()
    try:
        if ".." in text:
            parts = [int(p) for p in text.split("..")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError
            dims = tuple(range(lo, hi + 1, step))
        else:
            dims = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad dimension grid {text!r}") from None
    if not dims or min(dims) < 1:
        raise ConfigError(f"dimension grid {text!r} must be nonempty and positive")
    return dims


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not vals:
        raise ConfigError("empty grid")
    return vals


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _shape(text: str) -> tuple[int, int]:
    h, _, w = text.lower().partition("x")
    return int(h), int(w)


def read_pairs(path) -> dict[str, str]:
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key = key.strip()
            if key in pairs:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            pairs[key] = value.strip()
    return pairs


_CASTS = {
    "dataset.kind": str, "dataset.path": str, "dataset.resize": _shape,
    "dataset.classes": int, "dataset.per_class": int, "dataset.dim": int,
    "dataset.separation": float, "dataset.spread": float, "dataset.height": int,
    "dataset.width": int, "dataset.seed": int,
    "features.kind": str, "features.block": int, "features.overlap": float,
    "method.name": str, "method.scheme": WeightScheme.parse, "method.beta": float,
    "method.supervised": _bool, "method.pca_ratio": float, "method.classifier": str,
    "protocol.scheme": str, "protocol.k": int, "protocol.n": int, "protocol.seed": int,
    "protocol.dims": parse_dims,
    "output": str,
}


def load_config(path) -> RunConfig:
    """Parse and validate a config file; every problem surfaces as :class:`ConfigError`."""
    try:
        pairs = read_pairs(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    values: dict[str, dict] = {"dataset": {}, "features": {}, "method": {}, "protocol": {}}
    output = "out"
    for key, raw in pairs.items():
        if key not in _CASTS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            val = _CASTS[key](raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
        if key == "output":
            output = val
        else:
            section, name = key.split(".", 1)
            values[section][name] = val

    try:
        ds = DatasetConfig(**values["dataset"])
        feats = FeatureConfig(**values["features"])
        method = MethodConfig(**values["method"])
        proto = ProtocolConfig(**values["protocol"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    if ds.kind not in DATASET_KINDS:
        raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}, got {ds.kind!r}")
    if ds.kind in ("csv", "image-tree"):
        if not ds.path:
            raise ConfigError(f"dataset.path is required for {ds.kind} data")
        full = os.path.join(base, ds.path)
        if not os.path.exists(full):
            raise ConfigError(f"dataset.path does not exist: {full}")
        ds = DatasetConfig(**{**asdict(ds), "path": full})
    if feats.kind not in FEATURE_KINDS:
        raise ConfigError(f"features.kind must be one of {FEATURE_KINDS}, got {feats.kind!r}")
    images = ds.kind in ("image-tree", "synthetic-images")
    if feats.kind == "lbp" and not images:
        raise ConfigError("LBP features need image data")
    if method.two_d and (not images or feats.kind != "raw"):
        raise ConfigError(f"{method.name} needs raw image data")
    if proto.scheme == "k-fold" and proto.k is None:
        raise ConfigError("protocol.k is required for k-fold")
    if proto.scheme == "first-n-train" and proto.n is None:
        raise ConfigError("protocol.n is required for first-n-train")

    return RunConfig(ds, feats, method, proto, os.path.join(base, output))
