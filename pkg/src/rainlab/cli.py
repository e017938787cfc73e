"""Command-line entry point: ``rainlab <subcommand> ...``.

Failures print a single ``error: <Kind>: <message>`` line on stderr and exit
with status 1; usage errors exit with status 2.
"""
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .complexity import complexity
from .datapipe import build_pool, load_image, make_texture_corpus, save_png, texture_image
from .datapipe.pool import list_images
from .datapipe.textures import KINDS
from .errors import RainlabError
from .harness.config import parse_config
from .harness.evaluate import eval_model, plan_data
from .harness.sweep import run_sweep
from .micronet.checkpoint import save_checkpoint
from .micronet.train import train
from .rainsynth import composite, render_rain, resolve_range
from .seeding import STREAM_SYNTH, derive_seed


def _rain_arg(value):
    path = Path(value)
    try:
        if path.suffix == ".json" and path.is_file():
            return resolve_range(json.loads(path.read_text()))
        return resolve_range(value)
    except RainlabError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def cmd_pool(args):
    pool = build_pool(args.dir, args.n, args.patch_size, args.seed, args.channels)
    if args.manifest:
        pool.write_manifest(args.manifest)
    else:
        for line in pool.manifest_lines():
            print(line)
    if args.save_dir:
        for i, patch in enumerate(pool.patches):
            save_png(Path(args.save_dir) / f"{i:05d}.png", patch)
    print(f"pool: {len(pool)} patches of {args.patch_size}x{args.patch_size}", file=sys.stderr)
    return 0


def cmd_synth(args):
    spec = args.range
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.background_dir:
        backgrounds = build_pool(args.background_dir, args.n, args.size, args.seed).patches
    else:
        backgrounds = [texture_image(KINDS[i % len(KINDS)], args.size, derive_seed(args.seed, STREAM_SYNTH, i))
                       for i in range(args.n)]
    for i, b in enumerate(backgrounds):
        rain = render_rain(args.size, args.size, spec, derive_seed(args.seed, i), args.canvas or None)
        rainy = composite(b, rain)
        save_png(out / f"{i:04d}_rainy.png", rainy)
        save_png(out / f"{i:04d}_clean.png", b)
        save_png(out / f"{i:04d}_rain.png", rain.layer, bit_depth=16)
    print(f"synth: wrote {args.n} triples to {out}", file=sys.stderr)
    return 0


def cmd_train(args):
    cfg = parse_config(args.config)
    spec = args.range or cfg.rain_ranges()[0]
    seed = cfg.train.seed if args.seed is None else args.seed
    n = args.n if args.n is not None else cfg.sweep.n_backgrounds[0]
    tcfg = cfg.train_config(seed)
    if args.iterations is not None:
        tcfg = replace(tcfg, iterations=args.iterations)
    plan = plan_data(cfg, max_n=n)
    result = train(plan.train_pool(n, seed), spec, cfg.model_config(), tcfg)
    save_checkpoint(args.out, result.model, tcfg, spec, extra={"n_backgrounds": n})
    print(f"train: n={n} range={spec.name} seed={seed} iterations={tcfg.iterations} "
          f"final_loss={result.final_loss:.6f} -> {args.out}")
    return 0


def cmd_eval(args):
    cfg = parse_config(args.config)
    triple, _ = eval_model(args.checkpoint, cfg, json_path=args.json, oracle=args.oracle)
    print(f"E_R={triple.e_r:.2f} E_B={triple.e_b:.2f} PSNR={triple.psnr:.2f}")
    return 0


def cmd_sweep(args):
    cfg = parse_config(args.config)
    if args.preset:
        cfg = replace(cfg, sweep=replace(cfg.sweep, preset=args.preset))
    out = Path(args.out) if args.out else Path(args.config).with_suffix(".csv")
    results = run_sweep(cfg, out, checkpoint_dir=args.checkpoints)
    failed = sum(not r.ok for r in results)
    print(f"sweep: {len(results)} rows ({failed} failed) -> {out}")
    return 0


def cmd_complexity(args):
    folder = Path(args.dir)
    rows = []
    for path in list_images(folder):
        rep = complexity(load_image(path), args.levels, centered=args.centered)
        rows.append({"file": path.relative_to(folder).as_posix(),
                     "total": rep.total, "per_scale": rep.per_scale})
    if not rows:
        raise RainlabError(f"no images found in {folder}")
    mean = float(np.mean([r["total"] for r in rows]))
    print(json.dumps({"images": rows, "mean": mean, "centered": args.centered}, indent=2))
    return 0


def cmd_corpus(args):
    paths = make_texture_corpus(args.out, args.n_images, args.size, args.seed)
    print(f"corpus: wrote {len(paths)} textures to {args.out}", file=sys.stderr)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="rainlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pool", help="build a patch pool and print/write its manifest")
    s.add_argument("--dir", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--patch-size", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--channels", type=int, choices=(1, 3), default=3)
    s.add_argument("--manifest", help="JSON-lines manifest output path (default: stdout)")
    s.add_argument("--save-dir", help="also write each patch as PNG")
    s.set_defaults(func=cmd_pool)

    s = sub.add_parser("synth", help="render rainy/clean/rain-layer PNG triples")
    s.add_argument("--range", type=_rain_arg, default="medium",
                   help="preset name or path to a JSON rain spec")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--background-dir")
    s.add_argument("--canvas", type=int, default=512,
                   help="rain sampling canvas side (0 = patch size)")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="single training run")
    s.add_argument("--config", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--range", type=_rain_arg)
    s.add_argument("--seed", type=int)
    s.add_argument("--iterations", type=int)
    s.add_argument("--out", required=True, help="checkpoint path (.npz)")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a checkpoint on the held-out unseen-rain set")
    s.add_argument("--config", required=True)
    s.add_argument("--checkpoint")
    s.add_argument("--json", help="per-image breakdown output path")
    s.add_argument("--oracle", choices=("clean", "identity"),
                   help="score a synthetic prediction instead of a checkpoint")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="run the background-count x rain-range sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (default: config path with .csv)")
    s.add_argument("--checkpoints", help="directory for per-run checkpoints")
    s.add_argument("--preset", choices=("balance",))
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("complexity", help="structural complexity of every image in a folder")
    s.add_argument("--dir", required=True)
    s.add_argument("--levels", type=int)
    s.add_argument("--centered", action="store_true")
    s.set_defaults(func=cmd_complexity)

    s = sub.add_parser("corpus", help="write a procedural texture background folder")
    s.add_argument("--out", required=True)
    s.add_argument("--n-images", type=int, default=64)
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.command == "eval" and args.checkpoint is None and args.oracle is None:
        print("error: UsageError: eval needs --checkpoint or --oracle", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (RainlabError, OSError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
