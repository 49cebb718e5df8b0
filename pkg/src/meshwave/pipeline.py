"""Stage orchestration over a run directory.

Each stage reads its upstream artifacts from the run directory, writes
its own outputs there, and records a manifest entry holding the stage's
config subset, the hashes of the files it read, and the hashes of the
files it wrote.  A stage whose entry still matches on every count is
skipped on re-run (``force`` bypasses the check).  All writers are
deterministic, so two runs with the same config and seed produce
byte-identical trees.

Stage order and artifact map:

    synth      session/signals.csv, session/spans.csv
    decompose  subbands/meta.txt, subbands/band_<name>.csv
    mesh       mesh/windows.csv, mesh/true_labels.csv, mesh/embed_<name>.csv
    encode     encode/codes_<name>.csv, encode/params_<name>.bin,
               encode/loss_<name>.csv, and codes_all.csv (per-band codes
               concatenated column-wise)
    cluster    cluster/labels_<repr>_<band>.csv
    evaluate   evaluate/report.csv
    netstats   netstats/cluster_<k>_edges.csv, netstats/cluster_<k>_precision.csv
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from meshwave.clustering import (
    cluster_medoid,
    correlation_distance,
    hierarchical_cluster,
)
from meshwave.config import PipelineConfig
from meshwave.datagen import generate_session
from meshwave.encoder import concat_features, encode_features, save_params, train
from meshwave.io import (
    format_float,
    read_keyvalue,
    read_matrix_csv,
    sha256_file,
    write_keyvalue,
    write_matrix_csv,
)
from meshwave.mesh import build_embedding_matrix, unflatten_weights
from meshwave.metrics import adjusted_rand_index, rand_index
from meshwave.netstats import edge_precision, export_edge_list, export_precision, prune_to_sparsity
from meshwave.session import RegionTimeSeries, ScanSession, TaskSpan, partition_windows, window_labels
from meshwave.wavelet import decompose_all_subbands

STAGES = ("synth", "decompose", "mesh", "encode", "cluster", "evaluate", "netstats")

# stage slot used when deriving per-stage random seeds from the root seed
_SEED_SLOT = {"synth": 1, "encode": 4}

REPORT_HEADER = "subject,subband_set,representation,RI,ARI"


class UpstreamMissing(ValueError):
    """An earlier stage's artifacts are absent from the run directory."""


@dataclass
class StageOutcome:
    stage: str
    skipped: bool
    outputs: list[str]


def stage_seed(root_seed: int, stage: str, index: int = 0) -> np.random.SeedSequence:
    """Decorrelated per-stage (and per-band) seed derived from the root."""
    return np.random.SeedSequence((root_seed, _SEED_SLOT[stage], index))


# ---------------------------------------------------------------- manifest


def _manifest_path(run_dir: Path) -> Path:
    return run_dir / "manifest.json"


def _load_manifest(run_dir: Path) -> dict:
    path = _manifest_path(run_dir)
    if not path.exists():
        return {"stages": {}}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _save_manifest(run_dir: Path, manifest: dict) -> None:
    with open(_manifest_path(run_dir), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _hash_files(run_dir: Path, relpaths: list[str]) -> dict[str, str]:
    return {rel: sha256_file(run_dir / rel) for rel in sorted(relpaths)}


def _stage_is_fresh(run_dir: Path, manifest: dict, stage: str, config: dict, inputs: dict) -> bool:
    entry = manifest["stages"].get(stage)
    if entry is None or entry.get("config") != config or entry.get("inputs") != inputs:
        return False
    for rel, digest in entry.get("outputs", {}).items():
        path = run_dir / rel
        if not path.exists() or sha256_file(path) != digest:
            return False
    return True


def _record_stage(
    run_dir: Path, stage: str, config: dict, inputs: dict, outputs: list[str]
) -> StageOutcome:
    manifest = _load_manifest(run_dir)
    manifest["stages"][stage] = {
        "config": config,
        "inputs": inputs,
        "outputs": _hash_files(run_dir, outputs),
    }
    _save_manifest(run_dir, manifest)
    return StageOutcome(stage, False, sorted(outputs))


def _require(run_dir: Path, relpaths: list[str], stage: str, needed: str) -> dict[str, str]:
    missing = [rel for rel in relpaths if not (run_dir / rel).exists()]
    if missing:
        raise UpstreamMissing(
            f"{stage} requires the {needed} stage (missing {', '.join(sorted(missing))}); "
            f"run 'meshwave {needed}' first"
        )
    return _hash_files(run_dir, relpaths)


# ---------------------------------------------------------------- session io


def _region_header(n_regions: int) -> list[str]:
    return [f"region_{r + 1}" for r in range(n_regions)]


def write_session(run_dir: Path, session: ScanSession) -> list[str]:
    sdir = run_dir / "session"
    sdir.mkdir(parents=True, exist_ok=True)
    # scans down the rows reads naturally in a spreadsheet
    write_matrix_csv(sdir / "signals.csv", session.signals.data.T, _region_header(session.n_regions))
    with open(sdir / "spans.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label,start,end\n")
        for sp in session.spans:
            fh.write(f"{sp.label},{sp.start},{sp.end}\n")
    return ["session/signals.csv", "session/spans.csv"]


def read_session(run_dir: Path) -> ScanSession:
    sdir = run_dir / "session"
    matrix, _ = read_matrix_csv(sdir / "signals.csv", has_header=True)
    spans: list[TaskSpan] = []
    with open(sdir / "spans.csv", "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if not line:
                continue
            label, start, end = line.split(",")
            spans.append(TaskSpan(label, int(start), int(end)))
    return ScanSession(RegionTimeSeries(matrix.T), spans)


# ---------------------------------------------------------------- stages


def run_synth(run_dir: Path, cfg: PipelineConfig, seed: int = 0, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    from meshwave.config import effective_ini  # local import: avoids cycle at module load

    stage_cfg = {"synth": _synth_dict(cfg), "seed": seed}
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "synth", stage_cfg, {}):
        return StageOutcome("synth", True, [])
    session = generate_session(cfg.synth, stage_seed(seed, "synth"))
    outputs = write_session(run_dir, session)
    with open(run_dir / "config.ini", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(effective_ini(cfg))
    outputs.append("config.ini")
    return _record_stage(run_dir, "synth", stage_cfg, {}, outputs)


def _synth_dict(cfg: PipelineConfig) -> dict:
    s = cfg.synth
    return {
        "n_regions": s.n_regions,
        "task_blocks": [[label, length] for label, length in s.task_blocks],
        "source_count": s.source_count,
        "parents": s.parents,
        "weight_low": s.weight_low,
        "weight_high": s.weight_high,
        "driver_smoothing": s.driver_smoothing,
        "noise_sigma": s.noise_sigma,
    }


def run_decompose(run_dir: Path, cfg: PipelineConfig, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    stage_cfg = {"wavelet": cfg.wavelet, "levels": cfg.levels}
    inputs = _require(run_dir, ["session/signals.csv"], "decompose", "synth")
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "decompose", stage_cfg, inputs):
        return StageOutcome("decompose", True, [])
    session = read_session(run_dir)
    stack = decompose_all_subbands(session.signals.data, cfg.wavelet, cfg.levels)
    bdir = run_dir / "subbands"
    bdir.mkdir(parents=True, exist_ok=True)
    names = stack.names()
    header = _region_header(session.n_regions)
    outputs = []
    for b, name in enumerate(names):
        rel = f"subbands/band_{name}.csv"
        write_matrix_csv(run_dir / rel, stack.bands[b].T, header)
        outputs.append(rel)
    write_keyvalue(
        bdir / "meta.txt",
        {"wavelet": stack.wavelet, "levels": str(stack.levels), "bands": ",".join(names)},
    )
    outputs.append("subbands/meta.txt")
    return _record_stage(run_dir, "decompose", stage_cfg, inputs, outputs)


def read_band_names(run_dir: Path) -> list[str]:
    meta = read_keyvalue(Path(run_dir) / "subbands" / "meta.txt")
    return meta["bands"].split(",")


def _read_band(run_dir: Path, name: str) -> np.ndarray:
    matrix, _ = read_matrix_csv(Path(run_dir) / "subbands" / f"band_{name}.csv", has_header=True)
    return matrix.T  # back to regions x scans


def run_mesh(run_dir: Path, cfg: PipelineConfig, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    inputs = _require(run_dir, ["subbands/meta.txt", "session/spans.csv"], "mesh", "decompose")
    names = read_band_names(run_dir)
    inputs.update(_require(run_dir, [f"subbands/band_{n}.csv" for n in names], "mesh", "decompose"))
    stage_cfg = {
        "p": cfg.mesh_p,
        "ridge": cfg.mesh_ridge,
        "window_width": cfg.window_width,
        "abs_corr": cfg.abs_corr,
    }
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "mesh", stage_cfg, inputs):
        return StageOutcome("mesh", True, [])

    session = read_session(run_dir)
    mesh_cfg = cfg.mesh_config(session.n_regions)
    windows = partition_windows(session.n_scans, mesh_cfg.window_width)
    mdir = run_dir / "mesh"
    mdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    with open(mdir / "windows.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,start,end\n")
        for w in windows:
            fh.write(f"{w.index},{w.start},{w.end}\n")
    outputs.append("mesh/windows.csv")
    truth = window_labels(session, windows)
    with open(mdir / "true_labels.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window,label\n")
        for w, lab in zip(windows, truth):
            fh.write(f"{w.index},{lab}\n")
    outputs.append("mesh/true_labels.csv")
    for name in names:
        band = _read_band(run_dir, name)
        embed = build_embedding_matrix(band, mesh_cfg, windows)
        rel = f"mesh/embed_{name}.csv"
        write_matrix_csv(run_dir / rel, embed.features)
        outputs.append(rel)
    return _record_stage(run_dir, "mesh", stage_cfg, inputs, outputs)


def run_encode(run_dir: Path, cfg: PipelineConfig, seed: int = 0, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    inputs = _require(run_dir, ["subbands/meta.txt"], "encode", "decompose")
    names = read_band_names(run_dir)
    inputs.update(_require(run_dir, [f"mesh/embed_{n}.csv" for n in names], "encode", "mesh"))
    stage_cfg = {
        "hidden_sizes": list(cfg.hidden_sizes),
        "rho": cfg.rho,
        "sparsity_weight": cfg.sparsity_weight,
        "weight_decay": cfg.weight_decay,
        "corruption": cfg.corruption,
        "corruption_mode": cfg.corruption_mode,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "seed": seed,
    }
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "encode", stage_cfg, inputs):
        return StageOutcome("encode", True, [])

    edir = run_dir / "encode"
    edir.mkdir(parents=True, exist_ok=True)
    outputs = []
    band_codes = []
    for b, name in enumerate(names):
        embed, _ = read_matrix_csv(run_dir / "mesh" / f"embed_{name}.csv")
        rels, codes = _train_one(run_dir, cfg, embed, name, stage_seed(seed, "encode", b))
        band_codes.append(codes)
        outputs.extend(rels)
    # The fused feature set is the per-band codes laid side by side, not a
    # separately trained model: every band contributes its own code columns.
    fused = concat_features(band_codes)
    write_matrix_csv(run_dir / "encode" / "codes_all.csv", fused.features)
    outputs.append("encode/codes_all.csv")
    return _record_stage(run_dir, "encode", stage_cfg, inputs, outputs)


def _train_one(run_dir: Path, cfg: PipelineConfig, x: np.ndarray, name: str, seed):
    sdae_cfg = cfg.sdae_config(x.shape[1])
    result = train(x, sdae_cfg, seed)
    codes = encode_features(result.params, x)
    rels = [f"encode/codes_{name}.csv", f"encode/params_{name}.bin", f"encode/loss_{name}.csv"]
    write_matrix_csv(run_dir / rels[0], codes.features)
    save_params(run_dir / rels[1], result.params)
    write_matrix_csv(run_dir / rels[2], result.trajectory.reshape(-1, 1))
    return rels, codes


def _grid(cfg: PipelineConfig, names: list[str]) -> list[tuple[str, str]]:
    """(representation, band) combinations requested by the config."""
    bands: list[str] = []
    if "each" in cfg.band_tokens:
        bands.extend(names)
    if "all" in cfg.band_tokens:
        bands.append("all")
    return [(rep, band) for rep in cfg.representations for band in bands]


def _representation_features(run_dir: Path, rep: str, band: str, names: list[str]) -> np.ndarray:
    """Load (or assemble) the W x F feature matrix for one grid cell."""
    run_dir = Path(run_dir)
    if rep == "sdae":
        feats, _ = read_matrix_csv(run_dir / "encode" / f"codes_{band}.csv")
        return feats
    if rep == "mad":
        if band == "all":
            parts = [read_matrix_csv(run_dir / "mesh" / f"embed_{n}.csv")[0] for n in names]
            return np.hstack(parts)
        feats, _ = read_matrix_csv(run_dir / "mesh" / f"embed_{band}.csv")
        return feats
    if rep == "raw":
        windows = _read_windows(run_dir)
        if band == "all":
            return np.hstack([_raw_band_features(run_dir, n, windows) for n in names])
        return _raw_band_features(run_dir, band, windows)
    raise ValueError(f"unknown representation {rep!r}")


def _raw_band_features(run_dir: Path, name: str, windows) -> np.ndarray:
    band = _read_band(run_dir, name)
    rows = [band[:, w.start : w.end].reshape(-1) for w in windows]
    return np.array(rows)


def _read_windows(run_dir: Path):
    from meshwave.session import Window

    windows = []
    with open(Path(run_dir) / "mesh" / "windows.csv", "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                idx, start, end = (int(v) for v in line.split(","))
                windows.append(Window(idx, start, end))
    return windows


def read_true_labels(run_dir: Path) -> list[str]:
    labels = []
    with open(Path(run_dir) / "mesh" / "true_labels.csv", "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                labels.append(line.split(",")[1])
    return labels


def _grid_inputs(run_dir: Path, cfg: PipelineConfig, names: list[str], stage: str) -> dict[str, str]:
    rels = {"mesh/true_labels.csv", "mesh/windows.csv"}
    for rep, band in _grid(cfg, names):
        if rep == "sdae":
            rels.add(f"encode/codes_{band}.csv")
        elif rep == "mad":
            for n in names if band == "all" else [band]:
                rels.add(f"mesh/embed_{n}.csv")
        else:
            for n in names if band == "all" else [band]:
                rels.add(f"subbands/band_{n}.csv")
    needed = "encode" if any(rep == "sdae" for rep, _ in _grid(cfg, names)) else "mesh"
    return _require(run_dir, sorted(rels), stage, needed)


def run_cluster(run_dir: Path, cfg: PipelineConfig, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    _require(run_dir, ["subbands/meta.txt"], "cluster", "decompose")
    names = read_band_names(run_dir)
    inputs = _grid_inputs(run_dir, cfg, names, "cluster")
    stage_cfg = {
        "n_clusters": cfg.n_clusters,
        "linkage": cfg.linkage,
        "representations": list(cfg.representations),
        "bands": list(cfg.band_tokens),
    }
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "cluster", stage_cfg, inputs):
        return StageOutcome("cluster", True, [])

    truth = read_true_labels(run_dir)
    k = cfg.resolve_n_clusters(len(dict.fromkeys(truth)))
    cdir = run_dir / "cluster"
    cdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for rep, band in _grid(cfg, names):
        feats = _representation_features(run_dir, rep, band, names)
        assign = hierarchical_cluster(correlation_distance(feats), k, cfg.linkage)
        rel = f"cluster/labels_{rep}_{band}.csv"
        with open(run_dir / rel, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("window,label\n")
            for w, lab in enumerate(assign.labels):
                fh.write(f"{w},{lab}\n")
        outputs.append(rel)
    return _record_stage(run_dir, "cluster", stage_cfg, inputs, outputs)


def read_cluster_labels(run_dir: Path, rep: str, band: str) -> np.ndarray:
    labels = []
    with open(Path(run_dir) / "cluster" / f"labels_{rep}_{band}.csv", "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            line = line.strip()
            if line:
                labels.append(int(line.split(",")[1]))
    return np.array(labels, dtype=int)


def run_evaluate(run_dir: Path, cfg: PipelineConfig, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    _require(run_dir, ["subbands/meta.txt"], "evaluate", "decompose")
    names = read_band_names(run_dir)
    grid = _grid(cfg, names)
    rels = ["mesh/true_labels.csv"] + [f"cluster/labels_{rep}_{band}.csv" for rep, band in grid]
    inputs = _require(run_dir, rels, "evaluate", "cluster")
    stage_cfg = {
        "representations": list(cfg.representations),
        "bands": list(cfg.band_tokens),
    }
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "evaluate", stage_cfg, inputs):
        return StageOutcome("evaluate", True, [])

    truth = read_true_labels(run_dir)
    subject = run_dir.resolve().name
    rows = []
    for rep, band in grid:
        pred = read_cluster_labels(run_dir, rep, band)
        ri = rand_index(truth, pred)
        ari = adjusted_rand_index(truth, pred)
        rows.append((subject, band, rep, ri, ari))
    rows.sort(key=lambda row: (row[2], row[1]))
    vdir = run_dir / "evaluate"
    vdir.mkdir(parents=True, exist_ok=True)
    with open(vdir / "report.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        for subj, band, rep, ri, ari in rows:
            fh.write(f"{subj},{band},{rep},{format_float(ri)},{format_float(ari)}\n")
    return _record_stage(run_dir, "evaluate", stage_cfg, inputs, ["evaluate/report.csv"])


def run_netstats(run_dir: Path, cfg: PipelineConfig, force: bool = False) -> StageOutcome:
    run_dir = Path(run_dir)
    rep, band = cfg.netstats_representation, cfg.netstats_bands
    labels_rel = f"cluster/labels_{rep}_{band}.csv"
    inputs = _require(run_dir, [labels_rel, "mesh/embed_orig.csv"], "netstats", "cluster")
    _require(run_dir, ["subbands/meta.txt"], "netstats", "decompose")
    names = read_band_names(run_dir)
    if band != "all" and band not in names:
        raise ValueError(f"netstats.bands: {band!r} is neither 'all' nor one of {names}")
    stage_cfg = {
        "sparsity": cfg.netstats_sparsity,
        "representation": rep,
        "bands": band,
    }
    manifest = _load_manifest(run_dir)
    if not force and _stage_is_fresh(run_dir, manifest, "netstats", stage_cfg, inputs):
        return StageOutcome("netstats", True, [])

    labels = read_cluster_labels(run_dir, rep, band)
    feats = _representation_features(run_dir, rep, band, names)
    dist = correlation_distance(feats)
    embed, _ = read_matrix_csv(run_dir / "mesh" / "embed_orig.csv")
    n_regions = int(round(np.sqrt(embed.shape[1])))
    ndir = run_dir / "netstats"
    ndir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for lab in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == lab)
        medoid = cluster_medoid(dist, members)
        network = unflatten_weights(embed[medoid], n_regions)
        pruned = prune_to_sparsity(network, cfg.netstats_sparsity)
        rel = f"netstats/cluster_{lab}_edges.csv"
        export_edge_list(run_dir / rel, pruned)
        outputs.append(rel)
        if members.size >= 2:  # variance needs at least two member windows
            stack = np.array([unflatten_weights(embed[m], n_regions) for m in members])
            rel = f"netstats/cluster_{lab}_precision.csv"
            export_precision(run_dir / rel, edge_precision(stack))
            outputs.append(rel)
    return _record_stage(run_dir, "netstats", stage_cfg, inputs, outputs)


# ---------------------------------------------------------------- sweep


def run_chain(run_dir: Path, cfg: PipelineConfig, seed: int = 0, force: bool = False) -> list[StageOutcome]:
    """synth through evaluate in order (netstats stays a separate call)."""
    run_dir = Path(run_dir)
    outcomes = [run_synth(run_dir, cfg, seed, force)]
    outcomes.append(run_decompose(run_dir, cfg, force))
    outcomes.append(run_mesh(run_dir, cfg, force))
    if "sdae" in cfg.representations:
        outcomes.append(run_encode(run_dir, cfg, seed, force))
    outcomes.append(run_cluster(run_dir, cfg, force))
    outcomes.append(run_evaluate(run_dir, cfg, force))
    return outcomes


def run_sweep(base_dir: Path, cfg: PipelineConfig, force: bool = False) -> Path:
    """Replicate the chain over the configured seeds and pool the reports.

    Writes sweep_rows.csv (every per-seed row) and sweep_summary.csv
    (mean/std of RI and ARI per representation x sub-band cell) under
    ``base_dir``; returns the summary path.
    """
    base_dir = Path(base_dir)
    base_dir.mkdir(parents=True, exist_ok=True)
    all_rows: list[tuple[str, str, str, float, float]] = []
    for seed in cfg.sweep_seeds:
        sub = base_dir / f"seed_{seed}"
        run_chain(sub, cfg, seed, force)
        with open(sub / "evaluate" / "report.csv", "r", encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                line = line.strip()
                if line:
                    subj, band, rep, ri, ari = line.split(",")
                    all_rows.append((subj, band, rep, float(ri), float(ari)))

    with open(base_dir / "sweep_rows.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REPORT_HEADER + "\n")
        for subj, band, rep, ri, ari in all_rows:
            fh.write(f"{subj},{band},{rep},{format_float(ri)},{format_float(ari)}\n")

    cells: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for _, band, rep, ri, ari in all_rows:
        cells.setdefault((rep, band), []).append((ri, ari))
    summary = base_dir / "sweep_summary.csv"
    with open(summary, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("representation,subband_set,n_seeds,mean_RI,std_RI,mean_ARI,std_ARI\n")
        for rep, band in sorted(cells):
            ris = np.array([v[0] for v in cells[(rep, band)]])
            aris = np.array([v[1] for v in cells[(rep, band)]])
            fh.write(
                f"{rep},{band},{len(ris)},{format_float(ris.mean())},{format_float(ris.std())},"
                f"{format_float(aris.mean())},{format_float(aris.std())}\n"
            )
    return summary
