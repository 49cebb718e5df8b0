"""INI-file configuration for the pipeline verbs.

One section per stage; every key has a default, unknown sections or keys
are rejected, and validation reports *all* offending entries at once
instead of stopping at the first.  A few keys accept the token ``auto``
(or ``max`` / ``tasks``) and are resolved against the data later, at the
stage that knows the relevant size.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from meshwave.datagen import DEFAULT_TASK_BLOCKS, SynthSpec
from meshwave.encoder import SdaeConfig
from meshwave.mesh import MeshConfig

REPRESENTATIONS = ("raw", "mad", "sdae")
BAND_TOKENS = ("each", "all")


class ConfigError(ValueError):
    """Raised with a line per offending key."""


_DEFAULT_BLOCKS_STR = ",".join(f"{label}:{length}" for label, length in DEFAULT_TASK_BLOCKS)

DEFAULTS: dict[str, dict[str, str]] = {
    "synth": {
        "n_regions": "20",
        "source_count": "4",
        "parents": "3",
        "weight_low": "0.35",
        "weight_high": "0.95",
        "driver_smoothing": "7",
        "noise_sigma": "0.05",
        "task_blocks": _DEFAULT_BLOCKS_STR,
    },
    "decompose": {
        "wavelet": "db4",
        "levels": "2",
    },
    "mesh": {
        "p": "auto",
        "ridge": "32.0",
        "window_width": "30",
        "abs_corr": "false",
    },
    "encode": {
        "hidden_sizes": "500,64,21,7",
        "rho": "0.001",
        "sparsity_weight": "0.1",
        "weight_decay": "0.00055",
        "corruption": "0.2",
        "corruption_mode": "mask",
        "learning_rate": "0.01",
        "epochs": "2000",
    },
    "cluster": {
        "n_clusters": "tasks",
        "linkage": "average",
    },
    "evaluate": {
        "representations": "raw,mad,sdae",
        "bands": "each,all",
    },
    "netstats": {
        "sparsity": "0.01",
        "representation": "sdae",
        "bands": "all",
    },
    "sweep": {
        "seeds": "0:20",
    },
}


@dataclass
class PipelineConfig:
    """Typed view of the INI contents; ``None`` marks deferred auto keys."""

    synth: SynthSpec = field(default_factory=SynthSpec)
    wavelet: str = "db4"
    levels: int | None = 2  # None = deepest usable
    mesh_p: int | None = None  # None = min(40, R-1)
    mesh_ridge: float = 32.0
    window_width: int = 30
    abs_corr: bool = False
    hidden_sizes: tuple[int, ...] = (500, 64, 21, 7)
    rho: float = 0.001
    sparsity_weight: float = 0.1
    weight_decay: float = 0.00055
    corruption: float = 0.2
    corruption_mode: str = "mask"
    learning_rate: float = 0.01
    epochs: int = 2000
    n_clusters: int | None = None  # None = one per distinct task label
    linkage: str = "average"
    representations: tuple[str, ...] = REPRESENTATIONS
    band_tokens: tuple[str, ...] = ("each", "all")
    netstats_sparsity: float = 0.01
    netstats_representation: str = "sdae"
    netstats_bands: str = "all"
    sweep_seeds: tuple[int, ...] = tuple(range(20))

    def mesh_config(self, n_regions: int) -> MeshConfig:
        p = self.mesh_p if self.mesh_p is not None else min(40, n_regions - 1)
        return MeshConfig(
            p=p, ridge=self.mesh_ridge, window_width=self.window_width, abs_corr=self.abs_corr
        )

    def sdae_config(self, input_width: int) -> SdaeConfig:
        return SdaeConfig(
            layer_sizes=(input_width,) + self.hidden_sizes,
            rho=self.rho,
            sparsity_weight=self.sparsity_weight,
            weight_decay=self.weight_decay,
            corruption=self.corruption,
            corruption_mode=self.corruption_mode,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
        )

    def resolve_n_clusters(self, n_task_labels: int) -> int:
        return self.n_clusters if self.n_clusters is not None else n_task_labels


def _parse_task_blocks(text: str, errors: list[str], where: str):
    blocks = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        label, sep, length = part.partition(":")
        if not sep or not label.strip():
            errors.append(f"{where}: expected label:length, got {part!r}")
            return None
        try:
            n = int(length)
        except ValueError:
            errors.append(f"{where}: bad block length in {part!r}")
            return None
        blocks.append((label.strip(), n))
    if not blocks:
        errors.append(f"{where}: no task blocks given")
        return None
    return tuple(blocks)


def _parse_int_list(text: str, errors: list[str], where: str):
    try:
        values = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        errors.append(f"{where}: expected comma-separated integers, got {text!r}")
        return None
    if not values:
        errors.append(f"{where}: empty list")
        return None
    return values


def _parse_seeds(text: str, errors: list[str], where: str):
    text = text.strip()
    if ":" in text:
        start, _, stop = text.partition(":")
        try:
            lo, hi = int(start), int(stop)
        except ValueError:
            errors.append(f"{where}: expected start:stop, got {text!r}")
            return None
        if hi <= lo:
            errors.append(f"{where}: empty seed range {text!r}")
            return None
        return tuple(range(lo, hi))
    return _parse_int_list(text, errors, where)


def _collect(raw: dict[str, dict[str, str]]) -> PipelineConfig:
    errors: list[str] = []

    def get(section: str, key: str) -> str:
        return raw.get(section, {}).get(key, DEFAULTS[section][key])

    def as_int(section: str, key: str, lo=None, hi=None, special: str | None = None):
        text = get(section, key).strip()
        if special is not None and text == special:
            return None
        try:
            value = int(text)
        except ValueError:
            hint = f" (or '{special}')" if special else ""
            errors.append(f"{section}.{key}: expected an integer{hint}, got {text!r}")
            return None
        if lo is not None and value < lo or hi is not None and value > hi:
            errors.append(f"{section}.{key}: {value} out of range")
            return None
        return value

    def as_float(section: str, key: str, lo=None):
        text = get(section, key).strip()
        try:
            value = float(text)
        except ValueError:
            errors.append(f"{section}.{key}: expected a number, got {text!r}")
            return None
        if lo is not None and value < lo:
            errors.append(f"{section}.{key}: {value} out of range")
            return None
        return value

    def as_bool(section: str, key: str):
        text = get(section, key).strip().lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        errors.append(f"{section}.{key}: expected a boolean, got {text!r}")
        return None

    def as_choice(section: str, key: str, choices: tuple[str, ...]):
        text = get(section, key).strip().lower()
        if text not in choices:
            errors.append(f"{section}.{key}: {text!r} not one of {choices}")
            return None
        return text

    # reject unknown sections/keys first, so typos surface by name
    for section, keys in raw.items():
        if section not in DEFAULTS:
            errors.append(f"unknown section [{section}]")
            continue
        for key in keys:
            if key not in DEFAULTS[section]:
                errors.append(f"{section}.{key}: unknown key")

    blocks = _parse_task_blocks(get("synth", "task_blocks"), errors, "synth.task_blocks")
    synth_kwargs = dict(
        n_regions=as_int("synth", "n_regions", lo=2),
        source_count=as_int("synth", "source_count", lo=1),
        parents=as_int("synth", "parents", lo=1),
        weight_low=as_float("synth", "weight_low"),
        weight_high=as_float("synth", "weight_high"),
        driver_smoothing=as_int("synth", "driver_smoothing", lo=1),
        noise_sigma=as_float("synth", "noise_sigma", lo=0.0),
    )
    wavelet = as_choice("decompose", "wavelet", ("haar", "db4"))
    levels = as_int("decompose", "levels", lo=1, special="max")
    levels_is_max = get("decompose", "levels").strip() == "max"
    mesh_p = as_int("mesh", "p", lo=1, special="auto")
    mesh_ridge = as_float("mesh", "ridge", lo=0.0)
    window_width = as_int("mesh", "window_width", lo=2)
    abs_corr = as_bool("mesh", "abs_corr")
    hidden = _parse_int_list(get("encode", "hidden_sizes"), errors, "encode.hidden_sizes")
    rho = as_float("encode", "rho")
    sparsity_weight = as_float("encode", "sparsity_weight", lo=0.0)
    weight_decay = as_float("encode", "weight_decay", lo=0.0)
    corruption = as_float("encode", "corruption", lo=0.0)
    corruption_mode = as_choice("encode", "corruption_mode", ("mask", "column"))
    learning_rate = as_float("encode", "learning_rate")
    epochs = as_int("encode", "epochs", lo=0)
    n_clusters = as_int("cluster", "n_clusters", lo=1, special="tasks")
    linkage = as_choice("cluster", "linkage", ("average", "complete", "single"))
    netstats_sparsity = as_float("netstats", "sparsity")
    if netstats_sparsity is not None and not 0.0 < netstats_sparsity <= 1.0:
        errors.append(f"netstats.sparsity: {netstats_sparsity} not in (0, 1]")
    netstats_repr = as_choice("netstats", "representation", REPRESENTATIONS)
    netstats_bands = get("netstats", "bands").strip()
    seeds = _parse_seeds(get("sweep", "seeds"), errors, "sweep.seeds")

    reprs = []
    for token in get("evaluate", "representations").split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token not in REPRESENTATIONS:
            errors.append(f"evaluate.representations: {token!r} not one of {REPRESENTATIONS}")
        elif token not in reprs:
            reprs.append(token)
    band_tokens = []
    for token in get("evaluate", "bands").split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token not in BAND_TOKENS:
            errors.append(f"evaluate.bands: {token!r} not one of {BAND_TOKENS}")
        elif token not in band_tokens:
            band_tokens.append(token)
    if not reprs:
        errors.append("evaluate.representations: empty")
    if not band_tokens:
        errors.append("evaluate.bands: empty")

    synth = None
    if blocks is not None and all(v is not None for v in synth_kwargs.values()):
        try:
            synth = SynthSpec(task_blocks=blocks, **synth_kwargs)
        except ValueError as err:
            errors.append(f"synth: {err}")

    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

    return PipelineConfig(
        synth=synth,
        wavelet=wavelet,
        levels=None if levels_is_max else levels,
        mesh_p=mesh_p,
        mesh_ridge=mesh_ridge,
        window_width=window_width,
        abs_corr=abs_corr,
        hidden_sizes=hidden,
        rho=rho,
        sparsity_weight=sparsity_weight,
        weight_decay=weight_decay,
        corruption=corruption,
        corruption_mode=corruption_mode,
        learning_rate=learning_rate,
        epochs=epochs,
        n_clusters=n_clusters,
        linkage=linkage,
        representations=tuple(reprs),
        band_tokens=tuple(band_tokens),
        netstats_sparsity=netstats_sparsity,
        netstats_representation=netstats_repr,
        netstats_bands=netstats_bands,
        sweep_seeds=seeds,
    )


def load_config(path: str | Path | None) -> PipelineConfig:
    """Parse an INI file (or fall back to pure defaults)."""
    raw: dict[str, dict[str, str]] = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(str(path))
        if not read:
            raise ConfigError(f"config file not found: {path}")
        raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return _collect(raw)


def effective_ini(cfg: PipelineConfig) -> str:
    """Deterministic INI text of the fully resolved configuration."""
    synth = cfg.synth
    values: dict[str, dict[str, str]] = {
        "synth": {
            "n_regions": str(synth.n_regions),
            "source_count": str(synth.source_count),
            "parents": str(synth.parents),
            "weight_low": repr(synth.weight_low),
            "weight_high": repr(synth.weight_high),
            "driver_smoothing": str(synth.driver_smoothing),
            "noise_sigma": repr(synth.noise_sigma),
            "task_blocks": ",".join(f"{lb}:{ln}" for lb, ln in synth.task_blocks),
        },
        "decompose": {
            "wavelet": cfg.wavelet,
            "levels": "max" if cfg.levels is None else str(cfg.levels),
        },
        "mesh": {
            "p": "auto" if cfg.mesh_p is None else str(cfg.mesh_p),
            "ridge": repr(cfg.mesh_ridge),
            "window_width": str(cfg.window_width),
            "abs_corr": "true" if cfg.abs_corr else "false",
        },
        "encode": {
            "hidden_sizes": ",".join(str(s) for s in cfg.hidden_sizes),
            "rho": repr(cfg.rho),
            "sparsity_weight": repr(cfg.sparsity_weight),
            "weight_decay": repr(cfg.weight_decay),
            "corruption": repr(cfg.corruption),
            "corruption_mode": cfg.corruption_mode,
            "learning_rate": repr(cfg.learning_rate),
            "epochs": str(cfg.epochs),
        },
        "cluster": {
            "n_clusters": "tasks" if cfg.n_clusters is None else str(cfg.n_clusters),
            "linkage": cfg.linkage,
        },
        "evaluate": {
            "representations": ",".join(cfg.representations),
            "bands": ",".join(cfg.band_tokens),
        },
        "netstats": {
            "sparsity": repr(cfg.netstats_sparsity),
            "representation": cfg.netstats_representation,
            "bands": cfg.netstats_bands,
        },
        "sweep": {
            "seeds": ",".join(str(s) for s in cfg.sweep_seeds),
        },
    }
    lines: list[str] = []
    for section in sorted(values):
        lines.append(f"[{section}]")
        for key in sorted(values[section]):
            lines.append(f"{key} = {values[section][key]}")
        lines.append("")
    return "\n".join(lines)
