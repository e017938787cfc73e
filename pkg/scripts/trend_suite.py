"""Run the count sweep, rain-range sweep and determinism repeat for a config.

    python scripts/trend_suite.py configs/evidence.toml results/evidence

Creates the texture corpus the shipped configs point at if it is missing.
"""
import argparse
import logging
from pathlib import Path

from rainlab.datapipe import make_texture_corpus
from rainlab.harness import parse_config, trends


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("workdir")
    ap.add_argument("--no-repeat", action="store_true", help="skip the determinism rerun")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = parse_config(args.config, check_paths=False)
    bg = Path(cfg.data.background_dir)
    if not bg.is_dir():
        make_texture_corpus(bg, n_images=1200, size=128, seed=0)
    cfg = parse_config(args.config)
    checks = trends.run_trend_suite(cfg, args.workdir, determinism=not args.no_repeat)
    print(trends.report(checks))


if __name__ == "__main__":
    main()
