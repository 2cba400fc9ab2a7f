"""Pipeline configuration: line-oriented ``key = value`` files.

Lines starting with ``#`` are comments; unknown keys are rejected; every
value is range-checked at load.  The effective configuration (defaults
resolved) can be dumped and reloads to an equal structure.
"""

from dataclasses import dataclass, fields

__all__ = ["PipelineConfig", "ConfigError", "load_config", "dump_config", "parse_config_text"]

PROFILES = ("sixray-like", "gdxray-like", "opixray-like", "compass-like")
# cluster-count defaults per dataset profile
PROFILE_CLUSTERS = {
    "sixray-like": 4,
    "opixray-like": 4,
    "gdxray-like": 3,
    "compass-like": 3,
}
_BACKGROUNDS = ("textured_blobs", "gradient_noise")
_SHAPES = ("disk", "bar", "polygon")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    sigma: float = 5.0
    beta: float = 5.0
    patch_size: int = 64
    noise_std: float = 0.05
    alpha1: float = 0.7
    alpha2: float = 0.3
    clusters: int | None = None  # None: resolved from the dataset profile
    min_area: int | None = None  # None: 0.05% of the image area
    opening_radius: int = 2
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 0.001
    classifier_epochs: int = 30
    classifier_learning_rate: float = 0.0001
    seed: int = 0
    reference_image: str | None = None  # None: first train entry
    profile: str = "sixray-like"
    max_patches: int | None = None
    workers: int | None = None  # None: logical core count
    iou_thresh: float = 0.5
    synth_count: int = 10
    synth_height: int = 128
    synth_width: int = 128
    synth_background: str = "textured_blobs"
    synth_shapes: str = "disk,bar,polygon"
    synth_shift: float = 0.35

    def validate(self):
        checks = [
            (self.sigma > 0, "sigma must be > 0"),
            (self.beta > 0, "beta must be > 0"),
            (self.patch_size >= 8 and self.patch_size % 8 == 0,
             "patch_size must be a multiple of 8 and >= 8"),
            (self.noise_std >= 0, "noise_std must be >= 0"),
            (self.alpha1 >= 0, "alpha1 must be >= 0"),
            (self.alpha2 >= 0, "alpha2 must be >= 0"),
            (self.clusters is None or self.clusters >= 2, "clusters must be >= 2"),
            (self.min_area is None or self.min_area >= 1, "min_area must be >= 1"),
            (self.opening_radius >= 0, "opening_radius must be >= 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.learning_rate > 0, "learning_rate must be > 0"),
            (self.classifier_epochs >= 0, "classifier_epochs must be >= 0"),
            (self.classifier_learning_rate > 0, "classifier_learning_rate must be > 0"),
            (self.seed >= 0, "seed must be >= 0"),
            (self.profile in PROFILES, f"profile must be one of {PROFILES}"),
            (self.max_patches is None or self.max_patches >= 1,
             "max_patches must be >= 1"),
            (self.workers is None or self.workers >= 1, "workers must be >= 1"),
            (0 < self.iou_thresh <= 1, "iou_thresh must be in (0, 1]"),
            (self.synth_count >= 1, "synth_count must be >= 1"),
            (self.synth_height >= 32 and self.synth_width >= 32,
             "synthetic image dims must be >= 32"),
            (self.synth_background in _BACKGROUNDS,
             f"synth_background must be one of {_BACKGROUNDS}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        for shape in self.shape_list():
            if shape not in _SHAPES:
                raise ConfigError(f"unknown synth shape {shape!r}")
        return self

    def effective_clusters(self):
        return self.clusters if self.clusters is not None else PROFILE_CLUSTERS[self.profile]

    def shape_list(self):
        return tuple(s.strip() for s in self.synth_shapes.split(",") if s.strip())


_INT_KEYS = {
    "patch_size", "clusters", "min_area", "opening_radius", "epochs",
    "batch_size", "classifier_epochs", "seed", "max_patches", "workers",
    "synth_count", "synth_height", "synth_width",
}
_FLOAT_KEYS = {
    "sigma", "beta", "noise_std", "alpha1", "alpha2", "learning_rate",
    "classifier_learning_rate", "iou_thresh", "synth_shift",
}
_STR_KEYS = {"reference_image", "profile", "synth_background", "synth_shapes"}
_OPTIONAL_KEYS = {"clusters", "min_area", "max_patches", "workers", "reference_image"}


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(raw_value)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: {key} expects an integer")
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(raw_value)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: {key} expects a number")
        elif key in _STR_KEYS:
            values[key] = raw_value
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
    return PipelineConfig(**values).validate()


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def dump_config(config, path):
    """Write the effective configuration; None-valued optionals are omitted."""
    lines = ["# effective configuration (defaults resolved)"]
    for field in fields(PipelineConfig):
        value = getattr(config, field.name)
        if field.name == "clusters":
            value = config.effective_clusters()
        if value is None:
            continue
        lines.append(f"{field.name} = {value}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
