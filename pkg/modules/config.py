import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .rebalance import VARIANT_KINDS, VariantSpec

FAMILIES = ("forest", "adaboost", "voting")

FAMILY_DEFAULTS = {
    "forest": {"n_estimators": 200, "max_samples": 0.75, "max_depth": None},
    "adaboost": {"n_estimators": 100, "learning_rate": 0.5, "max_depth": 10},
}

GRID_PRESETS = {
    "adaboost-exp1": {
        "family": "adaboost",
        "axes": {
            "variant": ["original", "combined"],
            "n_estimators": [5, 10, 20, 30, 40, 50, 70, 100, 200],
            "learning_rate": [1e-3, 1e-2, 5e-2, 0.1, 0.2, 0.5, 0.7, 1.0],
            "max_depth": [1],
        },
    },
    "adaboost-exp2": {
        "family": "adaboost",
        "axes": {
            "variant": ["original", "combined"],
            "n_estimators": [100, 150, 200],
            "learning_rate": [0.1, 0.2, 0.5],
            "max_depth": list(range(2, 11)),
        },
    },
    "adaboost-exp3": {
        "family": "adaboost",
        "axes": {
            "variant": list(VARIANT_KINDS),
            "n_estimators": [100],
            "learning_rate": [0.1, 0.2, 0.5],
            "max_depth": list(range(2, 11)),
        },
    },
    "forest-estimators": {
        "family": "forest",
        "axes": {"n_estimators": [10, 25, 50, 100, 150, 200, 250, 300], "max_samples": [1.0]},
    },
    "forest-max-samples": {
        "family": "forest",
        "axes": {"n_estimators": [200], "max_samples": [0.25, 0.5, 0.75, 1.0]},
    },
}


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    stratified: bool = True


@dataclass(frozen=True)
class ModelConfig:
    family: str = "forest"
    params: dict = field(default_factory=dict)

    def resolved_params(self):
        if self.family == "voting":
            return {
                "forest": {**FAMILY_DEFAULTS["forest"], **self.params.get("forest", {})},
                "adaboost": {**FAMILY_DEFAULTS["adaboost"], **self.params.get("adaboost", {})},
                "weights": self.params.get("weights"),
            }
        return {**FAMILY_DEFAULTS[self.family], **self.params}


@dataclass(frozen=True)
class RunConfig:
    train: dict
    test: dict = field(default_factory=dict)
    label_map: Path = None
    split: SplitConfig = SplitConfig()
    variant: VariantSpec = VariantSpec()
    model: ModelConfig = ModelConfig()
    grid: dict = field(default_factory=dict)
    primary_eval: str = "original"
    top_k: int = 3
    seed: int = 0
    out: Path = Path("runs")
    jobs: int = 1


def _resolve(base_dir, value):
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def _paths(section, base_dir, what):
    if not isinstance(section, dict):
        raise ConfigError(f"'{what}' must map source names to paths")
    unknown = set(section) - {"original", "extra"}
    if unknown:
        raise ConfigError(f"'{what}' accepts only 'original' and 'extra', got {sorted(unknown)}")
    resolved = {name: _resolve(base_dir, value) for name, value in section.items()}
    for name, path in resolved.items():
        if not path.exists():
            raise ConfigError(f"{what}.{name}: {path} does not exist")
    return resolved


def _grid(document):
    preset_name = document.get("preset")
    family = document.get("model", {}).get("family", "forest")
    axes = {}
    if preset_name is not None:
        if preset_name not in GRID_PRESETS:
            raise ConfigError(f"unknown preset '{preset_name}', expected one of {sorted(GRID_PRESETS)}")
        preset = GRID_PRESETS[preset_name]
        family = preset["family"]
        axes.update(preset["axes"])
    axes.update(document.get("grid", {}))
    for axis, values in axes.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid axis '{axis}' must be a non-empty list")
    return family, {axis: tuple(values) for axis, values in axes.items()}


def run_config_from_dict(document, base_dir=Path("."), seed=None, out=None, jobs=None):
    base_dir = Path(base_dir)
    if "train" not in document or "original" not in document.get("train", {}):
        raise ConfigError("config needs train.original")
    train = _paths(document["train"], base_dir, "train")
    test = _paths(document.get("test", {}), base_dir, "test")
    label_map = document.get("label_map")
    if label_map is not None:
        label_map = _resolve(base_dir, label_map)
        if not label_map.exists():
            raise ConfigError(f"label_map: {label_map} does not exist")

    family, grid = _grid(document)
    if family not in FAMILIES:
        raise ConfigError(f"model family must be one of {FAMILIES}, got '{family}'")
    if grid and family == "voting":
        raise ConfigError("grid search supports the forest and adaboost families")
    for kind in grid.get("variant", ()):
        if kind not in VARIANT_KINDS:
            raise ConfigError(f"unknown variant '{kind}' in grid")

    primary_eval = document.get("primary_eval", "original")
    if primary_eval not in ("original", "combined"):
        raise ConfigError(f"primary_eval must be 'original' or 'combined', got '{primary_eval}'")
    if primary_eval == "combined" and "extra" not in train:
        raise ConfigError("primary_eval 'combined' needs train.extra")

    try:
        variant = VariantSpec(**document.get("variant", {}))
        split = SplitConfig(**document.get("split", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))
    if not 0.0 < split.train_fraction < 1.0:
        raise ConfigError(f"split.train_fraction must lie in (0, 1), got {split.train_fraction}")

    return RunConfig(
        train=train,
        test=test,
        label_map=label_map,
        split=split,
        variant=variant,
        model=ModelConfig(family, dict(document.get("model", {}).get("params", {}))),
        grid=grid,
        primary_eval=primary_eval,
        top_k=int(document.get("top_k", 3)),
        seed=int(document.get("seed", 0) if seed is None else seed),
        out=_resolve(base_dir, document.get("out", "runs")) if out is None else Path(out),
        jobs=int(document.get("jobs", 1) if jobs is None else jobs),
    )


def load_run_config(path, seed=None, out=None, jobs=None):
    """Read a JSON run config; relative paths resolve against the config's directory"""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})")
    return run_config_from_dict(document, path.parent, seed, out, jobs)


def grid_cells(cfg):
    """Cartesian product of the grid axes, in axis order; every cell names its variant"""
    axes = dict(cfg.grid)
    names = list(axes)
    cells = []
    for values in itertools.product(*(axes[name] for name in names)):
        cell = dict(zip(names, values))
        cell.setdefault("variant", cfg.variant.kind)
        cells.append(cell)
    return cells
