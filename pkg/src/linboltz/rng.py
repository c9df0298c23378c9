"""Counter-based uniform streams addressed by (seed, step, purpose, position).

Built on numpy's Philox4x64 bit generator. The key holds the run seed and a
purpose tag, the high counter words hold the step index, and the low counter
words index the position inside the stream. Any slice of a stream can be
regenerated without drawing what precedes it, so a particle range processed
by one worker sees exactly the numbers a sequential sweep would.
"""

from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1
_DOUBLES_PER_BLOCK = 4

# purpose tags
DECISION = 0
COLLISION = 1
INITIAL = 2


def uniforms(seed: int, step: int, purpose: int, start: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) at positions ``start .. start+count`` of one stream."""
    if count <= 0:
        return np.empty(0)
    key = (int(seed) & _SEED_MASK) | (int(purpose) << 64)
    block, offset = divmod(int(start), _DOUBLES_PER_BLOCK)
    counter = (int(step) << 128) + block
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return gen.random(count + offset)[offset:]


def normals_from_uniforms(u1: np.ndarray, u2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Box-Muller pair; ``u1`` in [0, 1) is flipped to (0, 1] before the log."""
    r = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * np.pi * u2
    return r * np.cos(theta), r * np.sin(theta)


def unit_vectors_from_uniforms(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Uniform directions on the sphere (Archimedes: cos(theta) uniform on [-1, 1])."""
    c = 2.0 * u1 - 1.0
    s = np.sqrt(np.maximum(0.0, 1.0 - c * c))
    phi = 2.0 * np.pi * u2
    n = np.stack([s * np.cos(phi), s * np.sin(phi), c], axis=-1)
    # renormalise so |n| = 1 to round-off regardless of the trig error
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def initial_generator(seed: int) -> np.random.Generator:
    """Generator for initial-condition sampling, disjoint from the step streams."""
    key = (int(seed) & _SEED_MASK) | (INITIAL << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=0))
