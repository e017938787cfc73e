"""Trend checks over sweep results (background count and rain range effects)."""
import csv
from collections import defaultdict
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterable, NamedTuple, Sequence

import numpy as np

from ..errors import InputError
from .sweep import run_sweep


class TrendCheck(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.detail})"


def table(results, metric) -> Dict[tuple, Dict[int, float]]:
    """``{(rain_range, n): {seed: value}}`` over successful rows."""
    out = defaultdict(dict)
    for r in results:
        if r.ok:
            out[(r.rain_range, r.n_backgrounds)][r.seed] = getattr(r, metric)
    return out


def _cell(tab, key):
    if key not in tab:
        raise InputError(f"no successful rows for rain range {key[0]!r} at n={key[1]}")
    return tab[key]


def _shared_seeds(cells):
    seeds = set.intersection(*(set(c) for c in cells))
    if not seeds:
        raise InputError("the compared cells share no seed")
    return sorted(seeds)


def er_ratio(results, rain_range="medium", low=8, high=1024, factor=1.3) -> TrendCheck:
    """Mean E_R at the smallest pool is at least ``factor`` times that at the largest."""
    tab = table(results, "e_r")
    a, b = np.mean(list(_cell(tab, (rain_range, low)).values())), np.mean(list(_cell(tab, (rain_range, high)).values()))
    ok = bool(a >= factor * b)
    return TrendCheck("E_R ratio", ok, f"mean E_R(n={low})={a:.3f}, mean E_R(n={high})={b:.3f}, "
                      f"ratio={a / b if b else float('inf'):.3f}, need >= {factor}")


def _per_seed_order(tab, keys, strict):
    cells = [_cell(tab, k) for k in keys]
    seeds = _shared_seeds(cells)
    hits = []
    for s in seeds:
        vals = [c[s] for c in cells]
        pairs = zip(vals, vals[1:])
        hits.append(all((x > y) if strict else (x >= y) for x, y in pairs))
    return seeds, hits


def er_monotone(results, rain_range="medium", counts: Sequence[int] = (8, 64, 1024), min_seeds=2) -> TrendCheck:
    """E_R non-increasing across ``counts`` for at least ``min_seeds`` seeds."""
    seeds, hits = _per_seed_order(table(results, "e_r"), [(rain_range, n) for n in counts], strict=False)
    return TrendCheck("E_R non-increasing in n", sum(hits) >= min_seeds,
                      f"{sum(hits)}/{len(seeds)} seeds, need {min_seeds}")


def eb_decreasing(results, rain_range="medium", counts: Sequence[int] = (8, 64, 1024), min_seeds=2) -> TrendCheck:
    """E_B strictly decreasing across ``counts`` for at least ``min_seeds`` seeds."""
    tab = table(results, "e_b")
    seeds, hits = _per_seed_order(tab, [(rain_range, n) for n in counts], strict=True)
    means = ", ".join(f"n={n}: {np.mean(list(tab[(rain_range, n)].values())):.3f}" for n in counts)
    return TrendCheck("E_B decreasing in n", sum(hits) >= min_seeds,
                      f"{sum(hits)}/{len(seeds)} seeds, need {min_seeds}; mean E_B {means}")


def range_interaction(results, n=64, wide="large", narrow="small") -> TrendCheck:
    """E_R after wide-range training beats narrow-range training in most seeds."""
    tab = table(results, "e_r")
    big, small = _cell(tab, (wide, n)), _cell(tab, (narrow, n))
    seeds = _shared_seeds([big, small])
    wins = sum(big[s] > small[s] for s in seeds)
    ok = wins * 2 > len(seeds)
    return TrendCheck("rain-range interaction", ok,
                      f"E_R({wide}) > E_R({narrow}) at n={n} in {wins}/{len(seeds)} seeds; "
                      f"means {np.mean(list(big.values())):.3f} vs {np.mean(list(small.values())):.3f}")


def csv_rows_without_wall(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    idx = rows[0].index("wall_s")
    return [r[:idx] + r[idx + 1:] for r in rows]


def same_csv(a, b) -> TrendCheck:
    ra, rb = csv_rows_without_wall(a), csv_rows_without_wall(b)
    diff = sum(x != y for x, y in zip(ra, rb)) + abs(len(ra) - len(rb))
    return TrendCheck("determinism", diff == 0 and len(ra) > 1,
                      f"{len(ra) - 1} rows, {diff} differing (wall_s excluded)")


def report(checks: Iterable[TrendCheck]) -> str:
    return "\n".join(c.line() for c in checks)


def run_trend_suite(cfg, workdir, counts=(8, 64, 1024), range_n=64, determinism=True, log=print):
    """Run the count sweep, the rain-range sweep and optionally a repeat of the
    count sweep under ``workdir``; return every trend check.

    Each sweep resumes from its CSV, so an interrupted suite can be restarted.
    """
    workdir = Path(workdir)
    counts_cfg = replace(cfg, sweep=replace(cfg.sweep, n_backgrounds=list(counts),
                                            rain_ranges=["medium"], preset=None))
    ranges_cfg = replace(cfg, sweep=replace(cfg.sweep, n_backgrounds=[range_n],
                                            rain_ranges=["small", "large"], preset=None))
    log(f"count sweep -> {workdir / 'counts.csv'}")
    counts_res = run_sweep(counts_cfg, workdir / "counts.csv")
    log(f"rain-range sweep -> {workdir / 'ranges.csv'}")
    ranges_res = run_sweep(ranges_cfg, workdir / "ranges.csv")
    checks = [
        er_ratio(counts_res, low=counts[0], high=counts[-1]),
        er_monotone(counts_res, counts=counts),
        eb_decreasing(counts_res, counts=counts),
        range_interaction(ranges_res, n=range_n),
    ]
    if determinism:
        log(f"repeat count sweep -> {workdir / 'counts_repeat.csv'}")
        run_sweep(counts_cfg, workdir / "counts_repeat.csv")
        checks.append(same_csv(workdir / "counts.csv", workdir / "counts_repeat.csv"))
    (workdir / "trends.txt").write_text(report(checks) + "\n")
    return checks
