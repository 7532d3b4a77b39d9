"""Counter-based random streams.

Every random draw in the toolkit flows from a Philox stream keyed by
``(seed, namespace, index)``:

    key = (seed << 64) | (namespace << 56) | index

Distinct keys give statistically independent streams, so per-item work can
run in any order (or in parallel) and still reproduce byte-identical
results. The namespace byte keeps unrelated consumers (stripe fields,
feature-stack weights, golden-bundle inputs) from ever sharing a stream.
"""

from __future__ import annotations

import numpy as np

NS_STRIPE = 0
NS_FEATURES = 1
NS_BUNDLE = 2

_MASK64 = (1 << 64) - 1
_MASK56 = (1 << 56) - 1


def derive_stream(seed: int, namespace: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, namespace, index)."""
    if not 0 <= namespace < 256:
        raise ValueError(f"namespace out of range: {namespace}")
    key = ((seed & _MASK64) << 64) | ((namespace & 0xFF) << 56) | (index & _MASK56)
    return np.random.Generator(np.random.Philox(key=key))
