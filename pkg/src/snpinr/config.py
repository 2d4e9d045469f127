"""Experiment configuration files.

Grammar (one statement per line)::

    # comment
    [section]
    key = <JSON literal>        # numbers, "strings", true/false, [lists]

Unknown sections or keys, badly typed values and a missing
``experiment.kind`` are rejected with the offending key and line number.
Defaults follow the full-scale protocol; ``preset = "desk"`` in
``[experiment]`` swaps in the reduced workstation sizes before explicit
keys are applied.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

KINDS = ("gen-noise", "pretrain", "fit", "denoise", "video-fit", "video-denoise",
         "ntk", "landscape", "tradeoff")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.key = key
        self.line = line


@dataclass
class ExperimentSection:
    kind: str = ""
    seed: int = 0
    preset: str = "full"
    jobs: int = 1
    methods: list = field(default_factory=lambda: ["siren", "snp:uniform", "snp:spectrum"])


@dataclass
class ModelSection:
    depth: int = 6
    hidden: int = 256
    omega: float = 30.0
    activation: str = "sine"


@dataclass
class NoiseSection:
    family: str = "uniform"
    n: int = 10
    height: int = 178
    width: int = 178
    channels: int = 3
    alpha_range: list = field(default_factory=lambda: [0.5, 3.5])
    gaussian_mean: float = 0.5
    gaussian_std: float = 0.2
    shape_count: int = 500
    size_exponent: float = 3.0
    size_range: list = field(default_factory=lambda: [4.0, 64.0])


@dataclass
class PretrainSection:
    iterations: int = 5000
    lr: float = 1e-4
    record_every: int = 100


@dataclass
class FitSection:
    iterations: int = 2000
    lr: float = 1e-4
    record_every: int = 10
    eval_ssim: bool = False


@dataclass
class DataSection:
    images: list = field(default_factory=list)  # PNG paths; empty -> pseudo-photos
    n_images: int = 5
    height: int = 178
    width: int = 178
    channels: int = 3


@dataclass
class DenoiseSection:
    photon_count: float = 30.0
    readout_sigma: float = 0.063
    iterations: int = 2000
    record_every: int = 10


@dataclass
class VideoSection:
    videos: list = field(default_factory=list)  # frame directories; empty -> synthetic
    n_videos: int = 3
    frames: int = 8
    height: int = 512
    width: int = 512
    channels: int = 3
    hidden: int = 256
    hidden_layers: int = 4
    rank: int = 10
    sigma: float = 0.02
    lr: float = 5e-4
    iterations: int = 100000
    record_every: int = 1000
    use_time_input: bool = True
    speed: float = 2.0


@dataclass
class AnalysisSection:
    size: int = 16
    hidden: int = 64
    depth: int = 3
    n_targets: int = 5
    pretrain_iterations: int = 1500
    resolution: int = 41
    span: float = 1.0
    landscape_fit_iterations: int = 300


SECTIONS = {
    "experiment": ExperimentSection,
    "model": ModelSection,
    "noise": NoiseSection,
    "pretrain": PretrainSection,
    "fit": FitSection,
    "data": DataSection,
    "denoise": DenoiseSection,
    "video": VideoSection,
    "analysis": AnalysisSection,
}

PRESETS = {
    "full": {},
    "desk": {
        "model": {"hidden": 128},
        "noise": {"height": 64, "width": 64},
        "pretrain": {"iterations": 1500},
        "fit": {"iterations": 1000},
        "data": {"height": 64, "width": 64},
        "denoise": {"iterations": 600},
        "video": {"height": 64, "width": 64, "hidden": 64, "iterations": 3000,
                  "record_every": 250, "lr": 5e-4},
    },
}


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    model: ModelSection = field(default_factory=ModelSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    pretrain: PretrainSection = field(default_factory=PretrainSection)
    fit: FitSection = field(default_factory=FitSection)
    data: DataSection = field(default_factory=DataSection)
    denoise: DenoiseSection = field(default_factory=DenoiseSection)
    video: VideoSection = field(default_factory=VideoSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def dumps(self) -> str:
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            for k, v in asdict(getattr(self, name)).items():
                lines.append(f"{k} = {json.dumps(v)}")
            lines.append("")
        return "\n".join(lines)

    @property
    def kind(self) -> str:
        return self.experiment.kind


def _check_type(section: str, key: str, value, default, line):
    def fail():
        raise ConfigError(f"{section}.{key} expects {type(default).__name__}, got {value!r}",
                          key, line)

    if isinstance(default, bool):
        if not isinstance(value, bool):
            fail()
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            fail()
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail()
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            fail()
    elif isinstance(default, list):
        if not isinstance(value, list):
            fail()
    return value


def _validate(cfg: ExperimentConfig, lines: dict):
    kind = cfg.experiment.kind
    if not kind:
        raise ConfigError("missing required key experiment.kind", "kind")
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind must be one of {', '.join(KINDS)}", "kind",
                          lines.get(("experiment", "kind")))
    if cfg.experiment.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.experiment.preset!r}", "preset",
                          lines.get(("experiment", "preset")))
    positive = [("fit", "iterations"), ("pretrain", "iterations"), ("denoise", "iterations"),
                ("video", "iterations"), ("noise", "n"), ("experiment", "jobs"),
                ("model", "depth"), ("model", "hidden"), ("data", "n_images")]
    for sec, key in positive:
        if getattr(getattr(cfg, sec), key) < 1:
            raise ConfigError(f"{sec}.{key} must be >= 1", key, lines.get((sec, key)))


def parse_config_text(text: str, overrides: dict | None = None,
                      defaults: dict | None = None) -> ExperimentConfig:
    """Parse config text.

    ``overrides`` and ``defaults`` map ``(section, key)`` to values; overrides
    win over the file, defaults only fill keys the file leaves unset.
    """
    raw: dict[str, dict] = {}
    lines: dict[tuple[str, str], int] = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", section, n)
            raw.setdefault(section, {})
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", None, n)
        if section is None:
            raise ConfigError("key outside of any [section]", None, n)
        key, _, val = s.partition("=")
        key = key.strip()
        known = {f.name for f in fields(SECTIONS[section])}
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section}]", key, n)
        try:
            value = json.loads(val.strip())
        except json.JSONDecodeError:
            raise ConfigError(f"cannot parse value of {key!r}: {val.strip()!r}", key, n) from None
        if key in raw[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", key, n)
        raw[section][key] = value
        lines[(section, key)] = n

    for (sec, key), value in (overrides or {}).items():
        raw.setdefault(sec, {})[key] = value
    for (sec, key), value in (defaults or {}).items():
        raw.setdefault(sec, {}).setdefault(key, value)

    preset = raw.get("experiment", {}).get("preset", "full")
    if not isinstance(preset, str) or preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}", "preset", lines.get(("experiment", "preset")))
    cfg = ExperimentConfig()
    for sec, vals in PRESETS[preset].items():
        for k, v in vals.items():
            setattr(getattr(cfg, sec), k, v)
    for sec, vals in raw.items():
        obj = getattr(cfg, sec)
        defaults = SECTIONS[sec]()
        for k, v in vals.items():
            setattr(obj, k, _check_type(sec, k, v, getattr(defaults, k), lines.get((sec, k))))
    _validate(cfg, lines)
    return cfg


def parse_config(path, overrides: dict | None = None,
                 defaults: dict | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), overrides, defaults)
