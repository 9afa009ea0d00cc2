"""Flat key = value experiment configuration.

One namespace of dotted keys covers data generation, augmentation, the
consistency and smoothness losses, the encoder, training, and evaluation.
Files hold `key = value` lines with `#` comments; unknown keys are
rejected. Values are coerced to the type of the key's default. Presets
are named override bundles applied below file and command-line overrides
(precedence: defaults < preset < file < --set flags).
"""

from __future__ import annotations

from .augment import SpecAugmentConfig
from .consistency import CrConfig
from .dataset import SyntheticTaskConfig
from .encoder import EncoderConfig
from .errors import InvalidInputError
from .smoothing import SrConfig

OBJECTIVES = ("ctc", "cr_ctc", "sr_ctc")
OPTIMIZERS = ("adam", "sgd")

# key -> (default, help). Type is the type of the default.
KEY_TABLE: dict[str, tuple[object, str]] = {
    "data.vocab_size": (8, "number of distinct tokens"),
    "data.feature_dim": (16, "feature vector width"),
    "data.min_frames_per_token": (4, "shortest token rendering"),
    "data.max_frames_per_token": (8, "longest token rendering"),
    "data.noise_std": (0.3, "Gaussian noise level on features"),
    "data.min_label_len": (3, "shortest label sequence"),
    "data.max_label_len": (10, "longest label sequence"),
    "data.num_train": (512, "training samples"),
    "data.num_dev": (64, "dev samples"),
    "data.num_test": (64, "test samples"),
    "data.seed": (0, "dataset generation seed"),
    "aug.warp_factor": (80, "time-warp window"),
    "aug.num_freq_masks": (2, "frequency masks per view"),
    "aug.max_freq_mask_width": (27, "frequency mask width cap"),
    "aug.num_time_masks": (10, "time masks per view before scaling"),
    "aug.max_time_mask_width": (100, "time mask width cap"),
    "aug.max_time_mask_fraction": (0.15, "masked-frame fraction cap"),
    "aug.time_scale_ratio": (1.0, "time-mask count/fraction multiplier"),
    "aug.cr_time_scale_ratio": (2.5, "time multiplier used by cr_ctc"),
    "aug.freq_scale_ratio": (1.0, "frequency-mask count/width multiplier"),
    "aug.mask_value": (0.0, "fill value for masked cells"),
    "cr.alpha": (0.2, "consistency weight"),
    "cr.target_mode": ("stop_gradient", "stop_gradient | flow_gradient"),
    "cr.distance": ("bidirectional_kl", "bidirectional_kl | hard_label_ce"),
    "cr.frame_filter": (
        "all",
        "all | exclude_self_masked | exclude_self_unmasked",
    ),
    "cr.normalize_by_frames": (False, "divide consistency sum by T"),
    "sr.beta": (0.2, "smoothness penalty weight"),
    "model.layers": (3, "residual conv blocks"),
    "model.hidden_dim": (64, "hidden width"),
    "model.context_radius": (2, "conv taps each side"),
    "model.dropout_prob": (0.1, "inverted dropout rate"),
    "model.layer_drop_prob": (0.1, "residual branch drop rate"),
    "model.downsample_factor": (1, "ceil-mode input pooling"),
    "train.objective": ("ctc", "ctc | cr_ctc | sr_ctc"),
    "train.epochs": (20, "training epochs"),
    "train.batch_size": (16, "samples per gradient step"),
    "train.lr": (2e-3, "learning rate"),
    "train.optimizer": ("adam", "adam | sgd"),
    "train.seed": (0, "training seed (init, dropout, shuffling)"),
    "train.fair_cost": (True, "halve epochs and batch for cr_ctc"),
    "eval.beam": (4, "prefix beam width"),
}

DEFAULTS: dict[str, object] = {k: v for k, (v, _) in KEY_TABLE.items()}

PRESETS: dict[str, dict[str, object]] = {
    # desk: the benchmark setting for objective comparisons. High feature
    # noise plus 2x pooling leaves each token ~2.5-3.5 encoder frames, the
    # regime where over-confident spiky alignments actually cost accuracy.
    # Duration range 5-7 keeps adjacent repeats decidable from span length
    # (4-8 would make e.g. 8 frames readable as one token or two).
    # Augmentation geometry is scaled to T in [15, 70], F=16.
    "desk": {
        "data.num_train": 240,
        "data.num_dev": 40,
        "data.num_test": 400,
        "data.noise_std": 1.6,
        "data.min_frames_per_token": 5,
        "data.max_frames_per_token": 7,
        "model.downsample_factor": 2,
        "train.epochs": 60,
        "train.batch_size": 16,
        "aug.warp_factor": 4,
        "aug.max_freq_mask_width": 2,
        "aug.num_time_masks": 4,
        "aug.max_time_mask_width": 4,
    },
    # smoke: quick end-to-end sanity run
    "smoke": {
        "data.num_train": 200,
        "data.num_dev": 24,
        "data.num_test": 24,
        "data.noise_std": 0.5,
        "aug.warp_factor": 4,
        "aug.max_freq_mask_width": 2,
        "aug.num_time_masks": 4,
        "aug.max_time_mask_width": 4,
        "model.hidden_dim": 32,
        "model.layers": 2,
        "train.epochs": 5,
        "train.batch_size": 16,
    },
}


def _coerce(key: str, text: str) -> object:
    if key not in DEFAULTS:
        raise InvalidInputError(f"unknown config key {key!r}")
    default = DEFAULTS[key]
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise InvalidInputError(f"{key}: expected a boolean, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise InvalidInputError(f"{key}: {exc}") from exc
    return text


def parse_config_text(text: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"config line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = _coerce(key.strip(), value)
    return out


def load_config_file(path) -> dict[str, object]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise InvalidInputError(f"cannot read config file {path}: {exc}") from exc


def parse_assignments(pairs: list[str]) -> dict[str, object]:
    """Parse --set style `key=value` strings."""
    out: dict[str, object] = {}
    for pair in pairs:
        if "=" not in pair:
            raise InvalidInputError(f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = _coerce(key.strip(), value)
    return out


def resolve(
    preset: str | None = None,
    file: str | None = None,
    assignments: list[str] | None = None,
) -> dict[str, object]:
    flat = dict(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise InvalidInputError(
                f"unknown preset {preset!r}; available: {sorted(PRESETS)}"
            )
        flat.update(PRESETS[preset])
    if file is not None:
        flat.update(load_config_file(file))
    if assignments:
        flat.update(parse_assignments(assignments))
    _validate(flat)
    return flat


def _validate(flat: dict[str, object]) -> None:
    if flat["train.objective"] not in OBJECTIVES:
        raise InvalidInputError(
            f"train.objective must be one of {OBJECTIVES}"
        )
    if flat["train.optimizer"] not in OPTIMIZERS:
        raise InvalidInputError(f"train.optimizer must be one of {OPTIMIZERS}")
    if int(flat["train.epochs"]) < 1 or int(flat["train.batch_size"]) < 1:
        raise InvalidInputError("train.epochs and train.batch_size must be >= 1")
    if int(flat["eval.beam"]) < 1:
        raise InvalidInputError("eval.beam must be >= 1")


def config_to_text(flat: dict[str, object]) -> str:
    lines = [f"{k} = {flat[k]}" for k in sorted(flat)]
    return "\n".join(lines) + "\n"


def data_config(flat: dict[str, object]) -> SyntheticTaskConfig:
    return SyntheticTaskConfig(
        vocab_size=int(flat["data.vocab_size"]),
        feature_dim=int(flat["data.feature_dim"]),
        min_frames_per_token=int(flat["data.min_frames_per_token"]),
        max_frames_per_token=int(flat["data.max_frames_per_token"]),
        noise_std=float(flat["data.noise_std"]),
        min_label_len=int(flat["data.min_label_len"]),
        max_label_len=int(flat["data.max_label_len"]),
        num_train=int(flat["data.num_train"]),
        num_dev=int(flat["data.num_dev"]),
        num_test=int(flat["data.num_test"]),
        seed=int(flat["data.seed"]),
    )


def augment_config(
    flat: dict[str, object], for_objective: str | None = None
) -> SpecAugmentConfig:
    """Augmentation policy; cr_ctc swaps in its own time-scaling ratio."""
    ratio = float(flat["aug.time_scale_ratio"])
    if for_objective == "cr_ctc":
        ratio = float(flat["aug.cr_time_scale_ratio"])
    return SpecAugmentConfig(
        warp_factor=int(flat["aug.warp_factor"]),
        num_freq_masks=int(flat["aug.num_freq_masks"]),
        max_freq_mask_width=int(flat["aug.max_freq_mask_width"]),
        num_time_masks=int(flat["aug.num_time_masks"]),
        max_time_mask_width=int(flat["aug.max_time_mask_width"]),
        max_time_mask_fraction=float(flat["aug.max_time_mask_fraction"]),
        time_scale_ratio=ratio,
        freq_scale_ratio=float(flat["aug.freq_scale_ratio"]),
        mask_value=float(flat["aug.mask_value"]),
    )


def cr_config(flat: dict[str, object]) -> CrConfig:
    return CrConfig(
        alpha=float(flat["cr.alpha"]),
        target_mode=str(flat["cr.target_mode"]),
        distance=str(flat["cr.distance"]),
        frame_filter=str(flat["cr.frame_filter"]),
        normalize_by_frames=bool(flat["cr.normalize_by_frames"]),
    )


def sr_config(flat: dict[str, object]) -> SrConfig:
    return SrConfig(beta=float(flat["sr.beta"]))


def encoder_config(flat: dict[str, object]) -> EncoderConfig:
    return EncoderConfig(
        layers=int(flat["model.layers"]),
        hidden_dim=int(flat["model.hidden_dim"]),
        context_radius=int(flat["model.context_radius"]),
        dropout_prob=float(flat["model.dropout_prob"]),
        layer_drop_prob=float(flat["model.layer_drop_prob"]),
        downsample_factor=int(flat["model.downsample_factor"]),
    )
