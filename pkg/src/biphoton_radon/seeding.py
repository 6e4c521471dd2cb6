"""Per-task random streams derived from one root seed.

A task is named by a text label and an integer index. The label is hashed
with SHA-256 and its first 8 bytes, together with the root seed and the
index, form the entropy of a :class:`numpy.random.SeedSequence`. Streams
for different ``(label, index)`` pairs are statistically independent and
do not depend on the order in which tasks run.
"""

import hashlib

import numpy as np


def task_entropy(seed: int, label: str, index: int = 0) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little"), int(index)]


def task_rng(seed: int, label: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(task_entropy(seed, label, index))))
