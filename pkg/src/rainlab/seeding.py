"""Platform-stable seed derivation (SplitMix64 mixing)."""

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# stream identifiers used when deriving per-purpose seeds
STREAM_INIT = 1
STREAM_BATCH = 2
STREAM_RAIN = 3
STREAM_POOL = 4
STREAM_EVAL_RAIN = 5
STREAM_SYNTH = 6


def splitmix64(x: int) -> int:
    """One SplitMix64 finalization step on a 64-bit integer."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Fold integer keys into ``seed``, returning a 64-bit child seed.

    ``derive_seed(s, i)`` is the per-sample seed used for parallel renders;
    extra keys nest further (e.g. stream, iteration, sample index).
    """
    h = splitmix64(seed & MASK64)
    for k in keys:
        h = splitmix64(h ^ (k & MASK64))
    return h
