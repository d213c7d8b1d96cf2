"""Deterministic RNG stream derivation for repeated trials."""

import numpy as np


def derive_stream(master_seed: int, stream: int) -> np.random.Generator:
    """Independent Generator for one repetition.

    Streams are counter-based Philox seeded from the entropy pair
    (master_seed, stream), so any subset can be produced in any order, or
    in worker processes, and still match a serial run bit for bit. Going
    through SeedSequence keeps the generators spawnable, which the sample
    ensembles rely on for their own per-sample children.
    """
    seq = np.random.SeedSequence(entropy=[master_seed % 2**64, stream % 2**64])
    return np.random.Generator(np.random.Philox(seq))
