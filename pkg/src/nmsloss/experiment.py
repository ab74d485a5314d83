"""Experiment orchestration: scene suites, ablation modes, metric tables.

A run is fully described by a declarative config (JSON file plus dotted
overrides); all randomness derives from its seeds, so re-running a config
reproduces every output byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .evaluation import EvalConfig, match_scene, mr_fppi, nms_event_counts
from .loss import LossConfig
from .nms import NmsInput, nms_greedy
from .scenegen import Scene, SceneSpec, generate_scene, scene_to_dict, scene_from_dict
from .suites import geometry_gradient_suite, nms_loss_gradient_suite
from .trainer import TrainConfig, history_rows, train_scene

log = logging.getLogger("nmsloss")

MODES = ("baseline", "pull", "push", "full", "nt-sweep", "gradcheck")
SUMMARY_HEADER = ["mode", "nt", "lambda_pull", "lambda_push", "mr_log_average",
                  "nms_fp", "nms_fn", "tp", "fp", "fn"]
CURVES_HEADER = ["scene_id", "iter", "l_reg", "l_pull", "l_push", "l_total"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "full"
    seed: int = 7
    n_scenes: int = 50
    # the standard crowded suite: heavy jitter, full visibility, and a
    # weak regression anchor so the ablation contrast is carried by the
    # pull/push gradients rather than by regression convergence
    scene: SceneSpec = SceneSpec(coord_noise_sigma=16.0, visibility_model="full")
    train: TrainConfig = TrainConfig(lr=150.0, iters=150, lambda_reg=0.0005)
    loss: LossConfig = LossConfig()
    eval: EvalConfig = EvalConfig()
    nt_values: tuple[float, ...] = (0.4, 0.45, 0.5, 0.55)
    scenes_path: str = ""  # eval mode: read scenes here instead of generating

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.n_scenes < 1:
            raise ConfigError("n_scenes must be >= 1")


def _apply_overrides(doc: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return doc


def load_config(path: str | None, overrides: list[str] | None = None,
                seed: int | None = None) -> ExperimentConfig:
    doc: dict = {}
    if path:
        with open(path) as fh:
            doc = json.load(fh)
    doc = _apply_overrides(doc, overrides or [])
    if seed is not None:
        doc["seed"] = seed
    scene_doc = {"coord_noise_sigma": 16.0, "visibility_model": "full",
                 **doc.get("scene", {})}
    train_doc = {"lr": 150.0, "iters": 150, "lambda_reg": 0.0005,
                 **doc.get("train", {})}
    try:
        return ExperimentConfig(
            mode=doc.get("mode", "full"),
            seed=int(doc.get("seed", 7)),
            n_scenes=int(doc.get("n_scenes", 50)),
            scene=SceneSpec(**{**scene_doc,
                               "score_range": tuple(scene_doc.get(
                                   "score_range", (0.3, 0.95))),
                               "gt_height_range": tuple(scene_doc.get(
                                   "gt_height_range", (60.0, 110.0)))}),
            train=TrainConfig(**train_doc,
                              loss_cfg=LossConfig(**doc.get("loss", {}))),
            loss=LossConfig(**doc.get("loss", {})),
            eval=EvalConfig(**{**doc.get("eval", {}),
                               "fppi_range": tuple(doc.get("eval", {}).get(
                                   "fppi_range", (1e-2, 1e0)))}),
            nt_values=tuple(doc.get("nt_values", (0.4, 0.45, 0.5, 0.55))),
            scenes_path=doc.get("scenes_path", ""),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def generate_suite(cfg: ExperimentConfig) -> list[Scene]:
    scenes = []
    for i in range(cfg.n_scenes):
        spec = replace(cfg.scene, seed=cfg.seed + i)
        scenes.append(generate_scene(spec))
    return scenes


def _mode_train_cfg(cfg: ExperimentConfig, mode: str,
                    nt: float | None = None) -> TrainConfig:
    loss = cfg.loss if nt is None else replace(cfg.loss, nt=nt)
    return replace(cfg.train, loss_cfg=loss,
                   enable_pull=mode in ("pull", "full", "nt-sweep"),
                   enable_push=mode in ("push", "full", "nt-sweep"))


def _train_one(args):
    scene, tc = args
    return train_scene(scene, tc)


def run_mode(scenes: list[Scene], cfg: ExperimentConfig, mode: str,
             nt: float | None = None, jobs: int = 1):
    """Train every scene under one ablation mode, then evaluate post-NMS.

    Returns (metrics dict, loss-curve rows).
    """
    tc = _mode_train_cfg(cfg, mode, nt)
    loss_cfg = tc.loss_cfg
    work = [(s, tc) for s in scenes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trained = list(pool.map(_train_one, work))
    else:
        trained = [_train_one(w) for w in work]

    curves = []
    match_results = []
    nms_fp = nms_fn = 0
    for (state, final) in trained:
        curves.extend(history_rows(final.id, state))
        p, q = nms_event_counts(final, loss_cfg)
        nms_fp += p
        nms_fn += q
        match_results.append(match_scene(_post_nms(final, loss_cfg.nt), cfg.eval))
    report = mr_fppi(match_results, cfg.eval)
    report.nms_fp_count = nms_fp
    report.nms_fn_count = nms_fn
    metrics = {"mode": mode, "nt": loss_cfg.nt,
               "lambda_pull": loss_cfg.lambda_pull if tc.enable_pull else 0.0,
               "lambda_push": loss_cfg.lambda_push if tc.enable_push else 0.0,
               **report.to_dict()}
    return metrics, curves


def evaluate_only(scenes: list[Scene], cfg: ExperimentConfig) -> dict:
    """Post-NMS evaluation of scenes as-is, no training."""
    match_results = [match_scene(_post_nms(s, cfg.loss.nt), cfg.eval)
                     for s in scenes]
    report = mr_fppi(match_results, cfg.eval)
    report.nms_fp_count = sum(nms_event_counts(s, cfg.loss)[0] for s in scenes)
    report.nms_fn_count = sum(nms_event_counts(s, cfg.loss)[1] for s in scenes)
    return {"mode": "eval", "nt": cfg.loss.nt,
            "lambda_pull": cfg.loss.lambda_pull,
            "lambda_push": cfg.loss.lambda_push, **report.to_dict()}


def _post_nms(scene: Scene, nt: float) -> Scene:
    dets = scene.detections
    kept = nms_greedy(NmsInput(boxes=[d.box for d in dets],
                               scores=[d.score for d in dets], nt=nt))
    return Scene(id=scene.id, image_w=scene.image_w, image_h=scene.image_h,
                 gt=scene.gt, detections=[dets[i] for i in kept])


class _OutputTracker:
    """Removes everything written so far if the run fails partway."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []

    def write_json(self, name: str, doc) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        self.written.append(path)
        return path

    def write_csv(self, name: str, header, rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        self.written.append(path)
        return path

    def cleanup(self):
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass


def _summary_row(metrics: dict) -> list:
    return [metrics[k if k not in ("nms_fp", "nms_fn") else k + "_count"]
            for k in ("mode", "nt", "lambda_pull", "lambda_push",
                      "mr_log_average", "nms_fp", "nms_fn", "tp", "fp", "fn")]


def run_experiment(cfg: ExperimentConfig, out_dir: str, jobs: int = 1,
                   subcommand: str = "train") -> int:
    """Execute one experiment; returns a process exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(out)
    try:
        return _run_experiment(cfg, tracker, jobs, subcommand)
    except Exception:
        tracker.cleanup()
        raise


def _run_experiment(cfg: ExperimentConfig, tracker: _OutputTracker,
                    jobs: int, subcommand: str) -> int:
    if subcommand == "gradcheck" or cfg.mode == "gradcheck":
        geo = geometry_gradient_suite(1000, seed=cfg.seed)
        nl = nms_loss_gradient_suite(200, seed=cfg.seed, loss_cfg=cfg.loss)
        print(geo)
        print(nl)
        tracker.write_json("gradcheck.json", {
            "geometry": {"checked": geo.n_checked, "rejected": geo.n_rejected,
                         "failed": geo.n_failed},
            "nms_loss": {"checked": nl.n_checked, "rejected": nl.n_rejected,
                         "failed": nl.n_failed}})
        return 0 if (geo.passed and nl.passed) else 1

    if subcommand == "eval" and cfg.scenes_path:
        with open(cfg.scenes_path) as fh:
            scenes = [scene_from_dict(d) for d in json.load(fh)]
    else:
        log.info("generating %d scenes (seed %d)", cfg.n_scenes, cfg.seed)
        scenes = generate_suite(cfg)
    tracker.write_json("scenes.json", [scene_to_dict(s) for s in scenes])

    if subcommand == "gen":
        return 0

    if subcommand == "eval":
        metrics = evaluate_only(scenes, cfg)
        tracker.write_json("metrics.json", metrics)
        tracker.write_csv("summary.csv", SUMMARY_HEADER, [_summary_row(metrics)])
        return 0

    mode = "nt-sweep" if subcommand == "sweep" else cfg.mode
    rows = []
    curves = []
    baseline_metrics, base_curves = run_mode(scenes, cfg, "baseline", jobs=jobs)
    rows.append(_summary_row(baseline_metrics))
    tracker.write_json("metrics-baseline.json", baseline_metrics)
    if mode == "baseline":
        curves = base_curves
        tracker.write_json("metrics.json", baseline_metrics)
    elif mode == "nt-sweep":
        sweep_metrics = []
        for nt in cfg.nt_values:
            log.info("nt-sweep: nt=%s", nt)
            m, c = run_mode(scenes, cfg, "nt-sweep", nt=nt, jobs=jobs)
            rows.append(_summary_row(m))
            sweep_metrics.append(m)
            curves = c  # keep the last sweep point's curves
        tracker.write_json("metrics.json", sweep_metrics)
    else:
        log.info("mode %s", mode)
        metrics, curves = run_mode(scenes, cfg, mode, jobs=jobs)
        rows.append(_summary_row(metrics))
        tracker.write_json("metrics.json", metrics)

    tracker.write_csv("summary.csv", SUMMARY_HEADER, rows)
    tracker.write_csv("loss_curves.csv", CURVES_HEADER, curves)
    return 0
