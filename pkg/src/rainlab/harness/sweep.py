"""Background-count x rain-range sweep with incremental, resumable CSV output."""
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from ..errors import NumericError
from ..micronet.checkpoint import save_checkpoint
from ..micronet.train import train
from .evaluate import model_outputs, plan_data, score_outputs

log = logging.getLogger(__name__)

CSV_HEADER = ["run_id", "seed", "n_backgrounds", "rain_range", "E_R", "E_B", "PSNR", "final_loss", "wall_s"]


@dataclass
class SweepResult:
    run_id: str
    seed: int
    n_backgrounds: int
    rain_range: str
    e_r: float
    e_b: float
    psnr: float
    final_loss: float
    wall_s: float
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and not math.isnan(self.e_r)

    def csv_row(self):
        return [self.run_id, str(self.seed), str(self.n_backgrounds), self.rain_range,
                _fmt(self.e_r), _fmt(self.e_b), _fmt(self.psnr), _fmt(self.final_loss),
                f"{self.wall_s:.3f}"]

    @classmethod
    def from_row(cls, row):
        return cls(row["run_id"], int(row["seed"]), int(row["n_backgrounds"]), row["rain_range"],
                   float(row["E_R"]), float(row["E_B"]), float(row["PSNR"]),
                   float(row["final_loss"]), float(row["wall_s"]))


def _fmt(x):
    return repr(float(x))


def run_id(n, range_name, seed):
    return f"n{n}_{range_name}_s{seed}"


def read_results(csv_path) -> List[SweepResult]:
    with open(csv_path, newline="") as fh:
        return [SweepResult.from_row(r) for r in csv.DictReader(fh)]


def _write_all(csv_path, results):
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in results:
            w.writerow(r.csv_row())


def _append(csv_path, result):
    with open(csv_path, "a", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(result.csv_row())
        fh.flush()
        os.fsync(fh.fileno())


def worker_count(n_cells):
    try:
        cap = int(os.environ.get("RAINLAB_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_cells))


_PLANS = {}


def _plan_for(cfg, max_n):
    key = (json.dumps(cfg.to_dict(), sort_keys=True), max_n)
    if key not in _PLANS:
        _PLANS.clear()
        _PLANS[key] = plan_data(cfg, max_n)
    return _PLANS[key]


def run_cell(cfg, n, spec, seed, max_n, checkpoint_dir=None) -> SweepResult:
    """Train and evaluate one (n, rain range, seed) cell."""
    rid = run_id(n, spec.name, seed)
    start = time.perf_counter()
    plan = _plan_for(cfg, max_n)
    tcfg = cfg.train_config(seed)
    try:
        result = train(plan.train_pool(n, seed), spec, cfg.model_config(), tcfg)
    except NumericError as exc:
        log.error("cell %s failed: %s", rid, exc)
        nan = float("nan")
        return SweepResult(rid, seed, n, spec.name, nan, nan, nan, nan,
                           time.perf_counter() - start, error=str(exc))
    outputs = model_outputs(result.model, plan.test.rainy)
    triple, _ = score_outputs(outputs, plan.test, cfg.eval.threshold, cfg.eval.mode)
    if checkpoint_dir is not None:
        save_checkpoint(Path(checkpoint_dir) / f"{rid}.npz", result.model, tcfg, spec,
                        extra={"run_id": rid, "n_backgrounds": n})
    return SweepResult(rid, seed, n, spec.name, triple.e_r, triple.e_b, triple.psnr,
                       result.final_loss, time.perf_counter() - start)


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(cfg, csv_path, checkpoint_dir=None, workers=None) -> List[SweepResult]:
    """Run every (n, range, seed) cell, appending one CSV row per finished cell.

    Rows already present (and successful) in ``csv_path`` are skipped; failed
    rows are dropped and retried. The config is echoed next to the CSV.
    """
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    cells = [(n, spec, seed) for n, spec in cfg.cells() for seed in cfg.seeds()]
    max_n = max(n for n, _, _ in cells)

    done = []
    if csv_path.exists() and csv_path.stat().st_size > 0:
        done = [r for r in read_results(csv_path) if r.ok]
    _write_all(csv_path, done)
    cfg.write_echo(csv_path.with_suffix(".config.json"))

    finished = {r.run_id for r in done}
    pending = [c for c in cells if run_id(c[0], c[1].name, c[2]) not in finished]
    jobs = [(cfg, n, spec, seed, max_n, checkpoint_dir) for n, spec, seed in pending]
    results = list(done)
    workers = workers or worker_count(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for res in ex.map(_run_cell_args, jobs):
                _append(csv_path, res)
                results.append(res)
    else:
        for job in jobs:
            res = run_cell(*job)
            log.info("%s E_R=%.3f E_B=%.3f PSNR=%.3f", res.run_id, res.e_r, res.e_b, res.psnr)
            _append(csv_path, res)
            results.append(res)
    return results
