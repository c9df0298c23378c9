from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from linboltz import rng


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    step=st.integers(0, 10**6),
    start=st.integers(0, 500),
    count=st.integers(1, 100),
)
def test_any_slice_reproduces_the_stream(seed, step, start, count):
    full = rng.uniforms(seed, step, rng.COLLISION, 0, start + count)
    part = rng.uniforms(seed, step, rng.COLLISION, start, count)
    np.testing.assert_array_equal(full[start:], part)


def test_streams_are_distinct():
    a = rng.uniforms(1, 0, rng.DECISION, 0, 64)
    assert not np.array_equal(a, rng.uniforms(2, 0, rng.DECISION, 0, 64))
    assert not np.array_equal(a, rng.uniforms(1, 1, rng.DECISION, 0, 64))
    assert not np.array_equal(a, rng.uniforms(1, 0, rng.COLLISION, 0, 64))


def test_uniforms_are_uniform():
    u = rng.uniforms(42, 3, rng.DECISION, 0, 400_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    counts = np.histogram(u, bins=20, range=(0, 1))[0]
    expected = len(u) / 20
    chi2 = np.sum((counts - expected) ** 2 / expected)
    assert chi2 < 45  # 19 dof, p ~ 1e-3


def test_box_muller_moments():
    u = rng.uniforms(7, 0, rng.COLLISION, 0, 1_000_000)
    g1, g2 = rng.normals_from_uniforms(u[::2], u[1::2])
    g = np.concatenate([g1, g2])
    assert np.all(np.isfinite(g))
    assert abs(g.mean()) < 5 / math.sqrt(len(g))
    assert abs(g.var() - 1) < 0.01
    assert abs(np.mean(g**4) - 3) < 0.05


def test_unit_vectors():
    u = rng.uniforms(9, 0, rng.COLLISION, 0, 200_000)
    n = rng.unit_vectors_from_uniforms(u[::2], u[1::2])
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-15)
    assert np.all(np.abs(n.mean(axis=0)) < 5 / math.sqrt(len(n)))


def test_empty_request():
    assert rng.uniforms(1, 1, 1, 5, 0).size == 0
