"""Command-line experiment harness.

Subcommands cover the full pipeline: ``simulate`` writes a baseband tensor
and ground-truth geometry, ``prior`` produces a candidate grid (scalar,
synthetic-camera, or file), ``reconstruct`` runs any of the four imaging
methods, ``eval`` scores reconstructions, ``sweep`` repeats the pipeline
over frequency configurations and reports the error trend, and ``report``
renders collected evaluation records as one table.

Every run is deterministic given (config, seed): a resolved-config snapshot
with a content hash is written next to the outputs, and reruns produce
byte-identical artifacts regardless of worker count. Exit codes: 0 success,
1 validation error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import io as mio
from .correlate import CandidateGrid
from .depth_prior import CameraIntrinsics, Extrinsics, build_prior
from .errors import ConfigurationError, NumericalError, ValidationError
from .metrics import EvalReport, evaluate_image, report_table
from .reconstruct import (
    DEFAULT_FILTER_DB,
    RadarImage,
    VoxelGridSpec,
    backproject,
    fsk2_reconstruct,
    fsk3_reconstruct,
    magnitude_filter,
    mm2fsk_reconstruct,
)
from .signal_core import FrequencySet, mimo_cross_array
from .simulate import NoiseSpec, make_scene, render_depth_map, simulate_baseband, surface_depth

__version__ = "0.1.0"

log = logging.getLogger("mmfsk")

METHODS = ("2fsk", "mm2fsk", "3fsk", "bp")

ARRAY_PROFILES = {
    # n_tx, n_rx, aperture (m); "full" mirrors a 94x94-pair panel and is slow
    "desk": (16, 16, 0.20),
    "full": (94, 94, 0.50),
}

DEFAULT_CONFIG = {
    "seed": 0,
    "workers": None,
    "output_dir": "out",
    "scene": {"kind": "plane", "params": {"depth": 0.30, "extent": 0.08, "spacing": 0.0015}},
    "array": {"profile": "desk"},
    "grid": {"width": 64, "height": 64, "spacing": 0.001, "center": [0.0, 0.0]},
    "frequencies": {"pair": "10.0"},
    "methods": ["mm2fsk"],
    "prior": {"mode": "scalar", "value": 0.40},
    "noise": None,
    "filter_db": DEFAULT_FILTER_DB,
    "voxel": None,
    "eval": {"erode": 1},
    "sweep": None,
}


def load_config(path: str | None, overrides: dict) -> dict:
    """Defaults, then the config file, then CLI flags. Sections replace
    wholesale so that selector keys (e.g. pair vs triple) never mix."""
    cfg = dict(DEFAULT_CONFIG)
    if path is not None:
        try:
            cfg.update(mio.load_json(path))
        except FileNotFoundError:
            raise FileNotFoundError(f"config file not found: {path}")
        except ValueError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _build_array(cfg: dict):
    spec = cfg.get("array") or {}
    if "profile" in spec:
        try:
            n_tx, n_rx, aperture = ARRAY_PROFILES[spec["profile"]]
        except KeyError:
            raise ConfigurationError(f"unknown array profile {spec['profile']!r}")
    else:
        n_tx, n_rx, aperture = spec["n_tx"], spec["n_rx"], spec["aperture"]
    return mimo_cross_array(int(n_tx), int(n_rx), float(aperture))


def _build_freqs(cfg: dict) -> FrequencySet:
    spec = cfg.get("frequencies") or {}
    if "pair" in spec:
        return FrequencySet.from_pair_name(spec["pair"])
    if "triple" in spec:
        low, high = spec["triple"]
        return FrequencySet.triple_from_pair_names(low, high)
    if "values_ghz" in spec:
        return FrequencySet(tuple(float(v) * 1e9 for v in spec["values_ghz"]))
    raise ConfigurationError("frequencies must give 'pair', 'triple', or 'values_ghz'")


def _build_grid(cfg: dict) -> CandidateGrid:
    g = cfg["grid"]
    return CandidateGrid.regular(
        int(g["width"]), int(g["height"]), float(g["spacing"]),
        tuple(g.get("center", (0.0, 0.0))),
    )


def _voxel_spec(cfg: dict) -> VoxelGridSpec:
    v = cfg.get("voxel")
    if v is None:
        # default volume: grid footprint, 20 cm of depth around the scene
        g = cfg["grid"]
        w = int(g["width"]) * float(g["spacing"])
        h = int(g["height"]) * float(g["spacing"])
        return VoxelGridSpec(
            extents=(w, h, 0.20),
            resolution=(int(g["width"]), int(g["height"]), 201),
            center=(g.get("center", (0.0, 0.0))[0], g.get("center", (0.0, 0.0))[1], 0.30),
        )
    return VoxelGridSpec(tuple(v["extents"]), tuple(v["resolution"]), tuple(v["center"]))


def _noise(cfg: dict) -> NoiseSpec:
    n = cfg.get("noise")
    if not n or n.get("snr_db") in (None, "none"):
        return NoiseSpec.none()
    return NoiseSpec(snr_db=float(n["snr_db"]), seed=int(n.get("seed", cfg.get("seed", 0))))


def _outdir(cfg: dict, args) -> Path:
    out = getattr(args, "output_dir", None) or os.environ.get("MMFSK_OUT") or cfg["output_dir"]
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _snapshot(cfg: dict, outdir: Path, command: str) -> None:
    resolved = dict(cfg)
    resolved["_meta"] = {
        "command": command,
        "version": __version__,
        "config_hash": mio.config_hash(cfg),
        "noise_algorithm": NoiseSpec.algorithm,
    }
    mio.dump_json(outdir / f"{command}_config.json", resolved)
    log.info("%s: version=%s seed=%s config_hash=%s", command, __version__,
             cfg.get("seed"), resolved["_meta"]["config_hash"])


def _default_calibration():
    """Synthetic camera slightly offset from the aperture, covering the grid."""
    width = height = 72
    focal = 3.0 * width
    intr = CameraIntrinsics(f_u=focal, f_v=focal, c_u=(width - 1) / 2.0, c_v=(height - 1) / 2.0)
    angle = np.deg2rad(2.0)
    rot = np.array(
        [
            [np.cos(angle), 0.0, np.sin(angle)],
            [0.0, 1.0, 0.0],
            [-np.sin(angle), 0.0, np.cos(angle)],
        ]
    )
    ext = Extrinsics(rot, np.array([0.01, 0.005, -0.01]))
    return intr, ext, width, height


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: dict, args) -> int:
    outdir = _outdir(cfg, args)
    scene_cfg = cfg["scene"]
    scene = make_scene(scene_cfg["kind"], scene_cfg["params"])
    array = _build_array(cfg)
    freqs = _build_freqs(cfg)
    baseband = simulate_baseband(scene, array, freqs, _noise(cfg))
    mio.write_baseband(outdir / "baseband.fskt", baseband)
    mio.write_ply(outdir / "gt_targets.ply", scene.positions, np.abs(scene.reflectivities))
    grid = _build_grid(cfg)
    if scene_cfg["kind"] != "random-cloud":
        gx, gy = np.meshgrid(grid.x, grid.y)
        mio.write_pfm(outdir / "gt_depth.pfm", surface_depth(scene_cfg["kind"], scene_cfg["params"], gx, gy))
    _snapshot(cfg, outdir, "simulate")
    log.info("simulate: %d targets, tensor %s -> %s", scene.n_targets, baseband.shape, outdir)
    return 0


def cmd_prior(cfg: dict, args) -> int:
    outdir = _outdir(cfg, args)
    grid = _build_grid(cfg)
    spec = cfg["prior"]
    mode = spec.get("mode", "scalar")
    if mode == "scalar":
        prior = grid.with_scalar_prior(float(spec["value"]))
    elif mode == "camera":
        if spec.get("calibration"):
            intr, ext = mio.load_calibration(spec["calibration"])
            width = int(spec.get("width", 72))
            height = int(spec.get("height", 72))
        else:
            intr, ext, width, height = _default_calibration()
        scene_cfg = cfg["scene"]
        depth_map = render_depth_map(scene_cfg["kind"], scene_cfg["params"], intr, ext, width, height)
        depth_map = _degrade_depth_map(depth_map, spec, int(cfg.get("seed", 0)))
        mio.write_pfm(outdir / "optical_depth.pfm", np.where(depth_map.valid, depth_map.depth, np.nan))
        prior = build_prior(depth_map, intr, ext, grid)
    elif mode == "file":
        prior = mio.load_candidate_grid(spec["path"])
    else:
        raise ConfigurationError(f"unknown prior mode {mode!r}")
    mio.save_candidate_grid(outdir / "prior_grid.json", prior)
    _snapshot(cfg, outdir, "prior")
    log.info("prior: %d valid pixels -> %s", int(prior.valid.sum()), outdir)
    return 0


def _degrade_depth_map(depth_map, spec: dict, seed: int):
    """Optional sensor imperfections: per-pixel depth noise and dropout."""
    from .depth_prior import OpticalDepthMap

    noise_mm = float(spec.get("noise_mm", 0.0))
    dropout = float(spec.get("dropout", 0.0))
    if noise_mm <= 0.0 and dropout <= 0.0:
        return depth_map
    rng = np.random.Generator(np.random.Philox(seed))
    depth = depth_map.depth.copy()
    valid = depth_map.valid.copy()
    if noise_mm > 0.0:
        depth = depth + rng.normal(0.0, noise_mm / 1000.0, depth.shape)
    if dropout > 0.0:
        valid &= rng.random(valid.shape) >= dropout
    return OpticalDepthMap(np.where(valid, depth, np.nan), valid)


def _load_prior_grid(cfg: dict, outdir: Path) -> CandidateGrid:
    path = outdir / "prior_grid.json"
    if not path.exists():
        raise FileNotFoundError(f"prior grid not found: {path} (run 'prior' first)")
    return mio.load_candidate_grid(path)


def cmd_reconstruct(cfg: dict, args) -> int:
    outdir = _outdir(cfg, args)
    bb_path = outdir / "baseband.fskt"
    if not bb_path.exists():
        raise FileNotFoundError(f"baseband tensor not found: {bb_path} (run 'simulate' first)")
    baseband = mio.read_baseband(bb_path)
    array = _build_array(cfg)
    freqs = _build_freqs(cfg)
    workers = cfg.get("workers")
    methods = cfg["methods"]
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown method(s) {unknown}; choose from {METHODS}")
    for method in methods:
        if method == "bp":
            image = backproject(baseband, _voxel_spec(cfg), array, freqs, workers=workers)
        else:
            grid = _load_prior_grid(cfg, outdir)
            recon = {"2fsk": fsk2_reconstruct, "mm2fsk": mm2fsk_reconstruct, "3fsk": fsk3_reconstruct}[method]
            image = recon(baseband, grid, array, freqs, workers=workers)
        image = magnitude_filter(image, float(cfg.get("filter_db", DEFAULT_FILTER_DB)))
        mio.export_radar_image(outdir, method, image)
        log.info("reconstruct[%s]: %d valid pixels", method, image.n_valid)
    _snapshot(cfg, outdir, "reconstruct")
    return 0


def _eval_grid(cfg: dict, method: str) -> CandidateGrid:
    """Lateral grid a method's image lives on: the candidate grid for the
    correction methods, the voxel volume's lateral axes for backprojection."""
    if method == "bp":
        spec = _voxel_spec(cfg)
        x, y = spec.axis(0), spec.axis(1)
        shape = (y.size, x.size)
        return CandidateGrid(x, y, np.full(shape, np.nan), np.zeros(shape, dtype=bool))
    return _build_grid(cfg)


def _load_image(outdir: Path, method: str, cfg: dict) -> RadarImage:
    depth = mio.read_pfm(outdir / f"{method}_depth.pfm")
    mag = mio.read_pfm(outdir / f"{method}_magnitude.pfm")
    joint = mio.read_pfm(outdir / f"{method}_joint_magnitude.pfm")
    grid = _eval_grid(cfg, method)
    valid = np.isfinite(depth)
    return RadarImage(x=grid.x, y=grid.y, depth=depth, magnitude=np.where(valid, mag, np.nan),
                      joint_magnitude=np.where(valid, joint, np.nan), valid=valid)


def cmd_eval(cfg: dict, args) -> int:
    outdir = _outdir(cfg, args)
    scene_cfg = cfg["scene"]
    erode = int(cfg.get("eval", {}).get("erode", 1))
    reports = []
    for method in cfg["methods"]:
        path = outdir / f"{method}_depth.pfm"
        if not path.exists():
            raise FileNotFoundError(f"reconstruction not found: {path} (run 'reconstruct' first)")
        image = _load_image(outdir, method, cfg)
        label = f"{method}@{_freq_label(cfg)}"
        report = evaluate_image(image, scene_cfg["kind"], scene_cfg["params"],
                                _eval_grid(cfg, method), erode=erode, label=label)
        reports.append(report)
        mio.dump_json(outdir / f"eval_{method}.json", report.to_dict())
    (outdir / "eval_table.txt").write_text(report_table(reports) + "\n", encoding="utf-8")
    _snapshot(cfg, outdir, "eval")
    for r in reports:
        log.info("eval[%s]: C(gt->r)=%.4fcm C(r->gt)=%.4fcm P=%.4fcm P_er=%.4fcm",
                 r.label, r.c_gt_to_r * 100, r.c_r_to_gt * 100, r.p_masked * 100, r.p_eroded * 100)
    return 0


def _freq_label(cfg: dict) -> str:
    spec = cfg["frequencies"]
    if "pair" in spec:
        return f"d{spec['pair']}"
    if "triple" in spec:
        return f"t{spec['triple'][0]}-{spec['triple'][1]}"
    return "custom"


def _sweep_runs(cfg: dict) -> list:
    """Normalize the sweep section into explicit run specs.

    The shorthand form sweeps one method over two-frequency configurations;
    the general form lists runs, each naming a method, a ``pair`` or
    ``triple``, and optionally a prior override.
    """
    sweep = cfg.get("sweep") or {}
    if sweep.get("runs"):
        return [dict(r) for r in sweep["runs"]]
    method = sweep.get("method", cfg["methods"][0])
    pairs = sweep.get("pairs")
    if not pairs:
        raise ConfigurationError("sweep needs 'pairs' or explicit 'runs'")
    return [{"method": method, "pair": p} for p in pairs]


def _run_label(run: dict) -> str:
    if "triple" in run:
        return f"{run['method']}@t{run['triple'][0]}-{run['triple'][1]}"
    return f"{run['method']}@d{run['pair']}"


def cmd_sweep(cfg: dict, args) -> int:
    """Run simulate->prior->reconstruct->eval per configuration, aggregate
    seed medians, and judge the error-vs-bandwidth trend."""
    outdir = _outdir(cfg, args)
    sweep = cfg.get("sweep") or {}
    seeds = sweep.get("seeds", [cfg.get("seed", 0)])
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    runs = _sweep_runs(cfg)

    records = []
    for run in runs:
        method = run["method"]
        freq_spec = {"triple": run["triple"]} if "triple" in run else {"pair": run["pair"]}
        label = _run_label(run)
        per_seed = []
        for seed in seeds:
            sub = {
                **cfg,
                "methods": [method],
                "seed": seed,
                "noise": (dict(cfg["noise"], seed=seed) if cfg.get("noise") else None),
                "output_dir": str(outdir / label.replace("@", "_") / f"seed_{seed}"),
                "frequencies": freq_spec,
            }
            if run.get("prior"):
                sub["prior"] = run["prior"]
            run_args = argparse.Namespace(output_dir=sub["output_dir"])
            cmd_simulate(sub, run_args)
            if method != "bp":
                cmd_prior(sub, run_args)
            cmd_reconstruct(sub, run_args)
            cmd_eval(sub, run_args)
            per_seed.append(mio.load_json(Path(sub["output_dir"]) / f"eval_{method}.json"))
        freqs = _build_freqs({"frequencies": freq_spec})
        record = {
            "label": label,
            "method": method,
            "delta_f_hz": freqs.delta(),
            "median_p_eroded": float(np.median([r["p_eroded"] for r in per_seed])),
            "median_p_masked": float(np.median([r["p_masked"] for r in per_seed])),
            "median_c_gt_to_r": float(np.median([r["c_gt_to_r"] for r in per_seed])),
            "median_c_r_to_gt": float(np.median([r["c_r_to_gt"] for r in per_seed])),
            "runs": per_seed,
        }
        records.append(record)
        log.info("sweep[%s]: median P_eroded=%.4f cm over %d seeds",
                 label, record["median_p_eroded"] * 100, len(seeds))

    # Trend verdict applies to single-method ablations over Delta f.
    verdict = "single configuration: no trend"
    rho = None
    same_method = len({r["method"] for r in records}) == 1
    if len(records) >= 2 and same_method:
        deltas = [r["delta_f_hz"] for r in records]
        meds = [r["median_p_eroded"] for r in records]
        rho = float(spearmanr(deltas, meds).statistic)
        trend = "non-increasing" if rho <= -0.8 else "not monotone"
        verdict = f"error vs frequency difference is {trend} (spearman={rho:.3f})"
    elif len(records) >= 2:
        best = min(records, key=lambda r: r["median_p_eroded"])
        verdict = f"best configuration: {best['label']}"
    doc = {"records": records, "spearman": rho, "verdict": verdict}
    mio.dump_json(outdir / "sweep_report.json", doc)
    reports = [
        EvalReport(
            c_gt_to_r=r["median_c_gt_to_r"],
            c_r_to_gt=r["median_c_r_to_gt"],
            p_masked=r["median_p_masked"],
            p_eroded=r["median_p_eroded"],
            label=r["label"],
        )
        for r in records
    ]
    (outdir / "sweep_table.txt").write_text(report_table(reports) + f"\n{verdict}\n", encoding="utf-8")
    _snapshot(cfg, outdir, "sweep")
    log.info("sweep: %s", verdict)
    return 0


def cmd_report(cfg: dict, args) -> int:
    outdir = _outdir(cfg, args)
    records = []
    for path in sorted(outdir.rglob("eval_*.json")):
        if path.name == "eval_config.json":  # run snapshot, not a record
            continue
        doc = mio.load_json(path)
        records.append(EvalReport(
            c_gt_to_r=doc["c_gt_to_r"], c_r_to_gt=doc["c_r_to_gt"],
            p_masked=doc["p_masked"], p_eroded=doc["p_eroded"],
            n_points_recon=doc.get("n_points_recon", 0),
            n_points_gt=doc.get("n_points_gt", 0),
            label=doc.get("label", path.stem),
        ))
    if not records:
        raise FileNotFoundError(f"no eval_*.json records under {outdir}")
    table = report_table(records)
    (outdir / "report_table.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfsk",
        description="Few-frequency MIMO radar depth imaging: simulation, priors, reconstruction, evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"mmfsk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__ or name)
        p.add_argument("-c", "--config", help="experiment config (JSON)")
        p.add_argument("-o", "--output-dir", help="output directory (overrides config and MMFSK_OUT)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--workers", type=int, help="worker pool size (default: CPU count)")
        p.add_argument("--method", action="append", dest="methods",
                       help="imaging method (repeatable): 2fsk, mm2fsk, 3fsk, bp")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "prior": cmd_prior,
    "reconstruct": cmd_reconstruct,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "methods": args.methods,
    }
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except (ValidationError, ValueError) as exc:
        log.error("validation: %s", exc)
        return 1
    except OSError as exc:
        log.error("i/o: %s", exc)
        return 2
    except NumericalError as exc:
        log.error("numerical: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
