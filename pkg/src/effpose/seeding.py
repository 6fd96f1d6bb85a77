"""Deterministic seed fan-out.

All randomness in a pipeline run flows from one top-level seed; each
consumer derives its own stream by hashing the seed together with a
stage name, so adding a stage never perturbs the others.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_entropy(seed: int, *names) -> int:
    digest = hashlib.sha256(
        ":".join([str(int(seed))] + [str(n) for n in names]).encode()).hexdigest()
    return int(digest[:32], 16)


def derived_rng(seed: int, *names) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(derive_entropy(seed, *names)))
