"""Run configuration: JSON schema, overrides and content-addressed run directories."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .experiments import METHODS, VARIANT_MODES
from .linkpred import ClassifierConfig
from .trainer import TrainConfig
from .walks import WalkConfig


class ConfigError(ValueError):
    pass


# JSON uses "lambda"; it is a Python keyword, so the dataclass field is ``lam``
_ALIASES = {"train": {"lambda": "lam"}}


def _section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    aliases = _ALIASES.get(name, {})
    data = {aliases.get(k, k): v for k, v in data.items()}
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {unknown}")
    if "k_list" in data:
        data["k_list"] = tuple(data["k_list"])
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


@dataclass
class RunConfig:
    dataset: str = ""
    method: str = "line"
    variant: str = "II"
    seed: int = 0
    split_ratios: tuple = (0.7, 0.1, 0.2)
    # lets variant II0 train longer than its epoch cap
    allow_long_attraction_only: bool = False
    train: TrainConfig = field(default_factory=TrainConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.variant not in VARIANT_MODES:
            raise ConfigError(f"variant must be one of {sorted(VARIANT_MODES)}")
        if len(self.split_ratios) != 3 or min(self.split_ratios) <= 0 or abs(sum(self.split_ratios) - 1) > 1e-9:
            raise ConfigError("split_ratios must be three positive numbers summing to 1")
        self.split_ratios = tuple(float(r) for r in self.split_ratios)
        mode = VARIANT_MODES[self.variant]
        if self.train.repulsion_mode != mode:
            self.train = replace(self.train, repulsion_mode=mode)
        if self.variant == "II0":
            cap = self.train.none_epoch_cap
            if self.allow_long_attraction_only:
                self.train = replace(self.train, none_epoch_cap=None)
            elif cap is not None and self.train.epochs > cap:
                raise ConfigError(f"variant II0 trains at most {cap} epochs (got {self.train.epochs}); "
                                  "set allow_long_attraction_only to override")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        top = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - top)
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown}")
        kw = {k: v for k, v in data.items() if k not in ("train", "walk", "classifier")}
        if "split_ratios" in kw:
            kw["split_ratios"] = tuple(kw["split_ratios"])
        train_data = dict(data.get("train") or {})
        if kw.get("variant") == "II0" and "epochs" not in train_data:
            # an unspecified epoch count means the attraction-only default
            train_data["epochs"] = train_data.get("none_epoch_cap") or TrainConfig.none_epoch_cap
        return cls(train=_section(TrainConfig, train_data, "train"),
                   walk=_section(WalkConfig, data.get("walk"), "walk"),
                   classifier=_section(ClassifierConfig, data.get("classifier"), "classifier"), **kw)

    @classmethod
    def load(cls, path, overrides=()) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(apply_overrides(data, overrides))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["split_ratios"] = list(self.split_ratios)
        d["classifier"]["k_list"] = list(self.classifier.k_list)
        d["train"]["lambda"] = d["train"].pop("lam")
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def run_dir(self, out) -> Path:
        return Path(out) / f"run-{self.digest()}"

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def parse_value(text: str):
    """JSON when it parses (numbers, booleans, lists), otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``KEY=VALUE`` strings; dotted keys reach into sections (``train.eta=0.1``)."""
    data = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        *path, leaf = key.strip().split(".")
        node = data
        for part in path:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
        node[leaf] = parse_value(value)
    return data
