import math
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

BLOCK_KINDS = ("plain", "bottleneck")
BOTTLENECK_RATIO = 4
DEFAULT_INPUT = (128, 128, 3)

PLAN_NOTES = (
    "head: adaptive pool to 1x1, then fc 4nf -> 2nf -> K",
    "bottleneck inner width = width / 4",
    "conv biases counted even when batchnorm follows",
    "shortcut projections and strides are not counted",
)


@dataclass(frozen=True)
class NetConfig:
    nf: int
    block_kind: str = "plain"
    nresb: tuple = (0, 0, 0)
    batchnorm: bool = False
    n_classes: int = 16
    input: tuple = DEFAULT_INPUT  # (height, width, channels)

    def __post_init__(self):
        object.__setattr__(self, "nresb", tuple(int(n) for n in self.nresb))
        object.__setattr__(self, "input", tuple(int(n) for n in self.input))
        if self.nf < 1:
            raise ValueError(f"nf must be >= 1, got {self.nf}")
        if self.block_kind not in BLOCK_KINDS:
            raise ValueError(f"block_kind must be one of {BLOCK_KINDS}, got '{self.block_kind}'")
        if len(self.nresb) != 3 or any(n < 0 for n in self.nresb):
            raise ValueError(f"nresb needs three non-negative entries, got {self.nresb}")
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be >= 1, got {self.n_classes}")
        if len(self.input) != 3 or any(n < 1 for n in self.input):
            raise ValueError(f"input must be (height, width, channels), got {self.input}")


@dataclass(frozen=True)
class LayerRow:
    name: str
    kind: str
    output_shape: tuple  # (height, width, channels)
    params: int


@dataclass(frozen=True)
class NetPlan:
    config: NetConfig
    layers: tuple
    notes: tuple = field(default=PLAN_NOTES)

    @property
    def total_params(self):
        return sum(layer.params for layer in self.layers)

    @property
    def conv_count(self):
        return sum(1 for layer in self.layers if layer.kind == "conv")

    def to_dict(self):
        return {
            "config": asdict(self.config),
            "layers": [asdict(layer) for layer in self.layers],
            "total_params": self.total_params,
            "notes": list(self.notes),
        }


# ResNet mimics: the first two standard stages are kept, the last two are merged
PRESETS = {
    "resnet18-like": NetConfig(nf=64, block_kind="plain", nresb=(2, 2, 4), batchnorm=True),
    "resnet34-like": NetConfig(nf=64, block_kind="plain", nresb=(3, 4, 9), batchnorm=True),
    "resnet50-like": NetConfig(nf=64, block_kind="bottleneck", nresb=(3, 4, 9), batchnorm=True),
    "resnet101-like": NetConfig(nf=64, block_kind="bottleneck", nresb=(3, 4, 26), batchnorm=True),
    "best-model": NetConfig(nf=128, block_kind="bottleneck", nresb=(6, 10, 6), batchnorm=True),
}


def conv_params(kernel, c_in, c_out, batchnorm=False):
    """k*k*Cin*Cout weights + Cout biases (+ 2*Cout batchnorm scale/shift)"""
    return kernel * kernel * c_in * c_out + c_out + (2 * c_out if batchnorm else 0)


def dense_params(n_in, n_out):
    return n_in * n_out + n_out


def _block_convs(kind, width):
    if kind == "plain":
        return [(3, width, width), (3, width, width)]
    inner = width // BOTTLENECK_RATIO
    return [(1, width, inner), (3, inner, inner), (1, inner, width)]


def plan_network(cfg):
    """Per-layer output shapes and parameter counts of the three-stage residual CNN"""
    height, width_px, channels = cfg.input
    if height < 8 or width_px < 8:
        raise ValueError(f"input {height}x{width_px} is too small for three 2x poolings (need 8x8)")
    widths = [cfg.nf, 2 * cfg.nf, 4 * cfg.nf]
    if cfg.block_kind == "bottleneck":
        for stage, (width, blocks) in enumerate(zip(widths, cfg.nresb), start=1):
            if blocks and width % BOTTLENECK_RATIO:
                raise ValueError(
                    f"stage {stage} width {width} is not divisible by {BOTTLENECK_RATIO} "
                    "for bottleneck blocks"
                )

    bn = cfg.batchnorm
    layers = [LayerRow("stem", "conv", (height, width_px, cfg.nf), conv_params(3, channels, cfg.nf, bn))]
    previous = cfg.nf
    for stage, (width, blocks) in enumerate(zip(widths, cfg.nresb), start=1):
        shape = (height, width_px, width)
        layers.append(LayerRow(f"stage{stage}.transition", "conv", shape,
                               conv_params(3, previous, width, bn)))
        for block in range(1, blocks + 1):
            for index, (kernel, c_in, c_out) in enumerate(_block_convs(cfg.block_kind, width), start=1):
                layers.append(LayerRow(
                    f"stage{stage}.block{block}.conv{index}", "conv",
                    (height, width_px, c_out), conv_params(kernel, c_in, c_out, bn),
                ))
        height, width_px = height // 2, width_px // 2
        layers.append(LayerRow(f"stage{stage}.pool", "pool", (height, width_px, width), 0))
        previous = width

    hidden = widths[2] // 2
    layers.append(LayerRow("adaptive_pool", "pool", (1, 1, widths[2]), 0))
    layers.append(LayerRow("fc1", "dense", (1, 1, hidden), dense_params(widths[2], hidden)))
    layers.append(LayerRow("fc2", "dense", (1, 1, cfg.n_classes), dense_params(hidden, cfg.n_classes)))
    return NetPlan(cfg, tuple(layers))


def plan_frame(plan):
    return pd.DataFrame({
        "layer": [layer.name for layer in plan.layers],
        "kind": [layer.kind for layer in plan.layers],
        "output_shape": ["x".join(str(n) for n in layer.output_shape) for layer in plan.layers],
        "params": [layer.params for layer in plan.layers],
    })


def plan_summary(name, cfg):
    """One row for the parameter bubble chart: weight-layer depth, filters, params"""
    plan = plan_network(cfg)
    return {
        "name": name,
        "nf": cfg.nf,
        "block_kind": cfg.block_kind,
        "depth": sum(1 for layer in plan.layers if layer.kind in ("conv", "dense")),
        "total_params": plan.total_params,
    }


def smoothed_targets(n_classes, true_class, epsilon):
    targets = np.full(n_classes, epsilon / n_classes)
    targets[true_class] += 1.0 - epsilon
    return targets


def label_smoothing_loss(p, true_class, epsilon):
    """Cross-entropy of p against the label-smoothed one-hot target of true_class"""
    p = np.asarray(p, dtype=np.float64)
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    if not 0 <= true_class < p.shape[0]:
        raise ValueError(f"true_class {true_class} out of range for {p.shape[0]} classes")
    if np.any(p <= 0):
        raise ValueError("label smoothing loss is undefined for zero probabilities")
    if not math.isclose(p.sum(), 1.0, abs_tol=1e-6):
        raise ValueError(f"probabilities must sum to 1, got {p.sum()}")
    return float(-np.sum(smoothed_targets(p.shape[0], true_class, epsilon) * np.log(p)))
