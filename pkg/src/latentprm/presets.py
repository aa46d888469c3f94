"""Named experiment presets and config-file overrides."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import CorpusParams
from .geometry import WorkspaceClass
from .nn import TrainConfig
from .planner import RAW_SAMPLES


@dataclass(frozen=True)
class Preset:
    name: str
    wclass: str
    robot: str
    corpus: CorpusParams
    cae_arch: str
    cae_train: TrainConfig
    mlp_train: TrainConfig
    n_samples: int
    bench_workspaces: int
    bench_queries: int
    timing_reps: int = 3
    seed: int = 0
    samplers: tuple[str, ...] = ("BS", "OB", "G", "BT")
    extra: dict = field(default_factory=dict)

    def replace(self, **kw) -> "Preset":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["samplers"] = list(self.samplers)
        return d


_CAE_2D = TrainConfig(lr=0.002, lam=0.001, epochs=3000, batch_size=5, seed=0)
_CAE_3D = TrainConfig(lr=0.002, lam=0.001, epochs=300, batch_size=5, seed=0)
_MLP = TrainConfig(lr=0.1, lam=0.0, dropout=0.5, epochs=200, batch_size=64, seed=0)

PRESETS: dict[str, Preset] = {
    "2ds-full": Preset("2ds-full", "2DS", "point2d", CorpusParams.full("2DS"), "2DS", _CAE_2D, _MLP,
                       RAW_SAMPLES["2DS"], 10, 10),
    "2ds-desk": Preset("2ds-desk", "2DS", "point2d", CorpusParams(10, 10, 5, 100), "2DS",
                       _CAE_2D.replace(epochs=300), _MLP.replace(epochs=100), RAW_SAMPLES["2DS"], 3, 3),
    "3do-desk": Preset("3do-desk", "3DO", "boxchain8", CorpusParams(10, 10, 5, 200), "3DO-desk",
                       _CAE_3D.replace(epochs=100), _MLP, RAW_SAMPLES["3DO"], 10, 10),
    "3dc7-desk": Preset("3dc7-desk", "3DC", "boxchain7", CorpusParams(20, 20, 10, 200), "3DC",
                        _CAE_3D, _MLP, RAW_SAMPLES["3DC"], 100, 1),
    "3dc9-desk": Preset("3dc9-desk", "3DC", "boxchain9", CorpusParams(20, 20, 10, 200), "3DC",
                        _CAE_3D, _MLP, RAW_SAMPLES["3DC"], 100, 1),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}") from None


_NESTED = {"corpus": CorpusParams, "cae_train": TrainConfig, "mlp_train": TrainConfig}


def apply_overrides(preset: Preset, overrides: dict) -> Preset:
    """Merge a (possibly partial) mapping into a preset; nested sections merge field-wise."""
    names = {f.name for f in dataclasses.fields(Preset)}
    kw = {}
    for key, value in overrides.items():
        if key not in names or key == "name":
            raise ValueError(f"unknown preset field {key!r}")
        if key in _NESTED:
            if not isinstance(value, dict):
                raise ValueError(f"{key} must be an object")
            cur = getattr(preset, key)
            try:
                kw[key] = dataclasses.replace(cur, **value)
            except TypeError as exc:
                raise ValueError(f"{key}: {exc}") from None
        elif key == "samplers":
            kw[key] = tuple(str(v).upper() for v in value)
        else:
            kw[key] = value
    out = preset.replace(**kw)
    WorkspaceClass.parse(out.wclass)
    return out


def load_config(path: str | Path) -> dict:
    """JSON object: optional "preset" name plus any preset fields to override."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return data


def resolve(preset_name: str | None, config_path: str | Path | None, flags: dict) -> Preset:
    """flags > config file > built-in preset."""
    cfg = load_config(config_path) if config_path else {}
    name = preset_name or cfg.pop("preset", None) or "2ds-full"
    cfg.pop("preset", None)
    # Merge before validating so an intermediate layer may be inconsistent on its own.
    merged = dict(cfg)
    for key, value in flags.items():
        if value is None:
            continue
        if key in _NESTED and isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return apply_overrides(get_preset(name), merged)
