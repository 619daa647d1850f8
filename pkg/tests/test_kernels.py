"""Backend parity: the compiled scan and the pure Python fallback must
produce identical neighbor tables, and both must match a plain
sort-everything reference."""

import numpy as np
import pytest

from pipegrade import _kernels


def reference_neighbors(train, queries, kmax, exclude):
    """Full stable sort on (squared distance, index), no selection tricks."""
    out_d2 = np.empty((len(queries), kmax), dtype=np.int64)
    out_idx = np.empty((len(queries), kmax), dtype=np.int64)
    for qi, q in enumerate(queries):
        pairs = sorted(
            (int(((row - q) ** 2).sum()), j)
            for j, row in enumerate(train)
            if j != exclude[qi]
        )[:kmax]
        out_d2[qi] = [p[0] for p in pairs]
        out_idx[qi] = [p[1] for p in pairs]
    return out_d2, out_idx


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    previous = _kernels.active_name()
    _kernels.set_active(request.param)
    yield _kernels.get_active()
    _kernels.set_active(previous)


def test_native_backend_was_built():
    assert "native" in _kernels.available_backends()


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unknown kernel backend"):
        _kernels.set_active("fortran")


class TestNeighborScan:
    def test_matches_reference_randomized(self, backend):
        rng = np.random.default_rng(2024)
        for _ in range(150):
            n = int(rng.integers(2, 50))
            d = int(rng.integers(1, 12))
            m = int(rng.integers(1, 8))
            train = rng.integers(1, 6, size=(n, d)).astype(np.int64)
            queries = rng.integers(1, 6, size=(m, d)).astype(np.int64)
            exclude = np.where(rng.random(m) < 0.4,
                               rng.integers(0, n, size=m), -1).astype(np.int64)
            limit = n - 1 if (exclude >= 0).any() else n
            if limit < 1:
                continue
            kmax = int(rng.integers(1, limit + 1))
            got = backend.neighbors(train, queries, kmax, exclude)
            want = reference_neighbors(train, queries, kmax, exclude)
            np.testing.assert_array_equal(got[0], want[0])
            np.testing.assert_array_equal(got[1], want[1])

    def test_tie_order_is_by_training_index(self, backend):
        train = np.array([[3, 3], [1, 1], [3, 3], [1, 1]], dtype=np.int64)
        queries = np.array([[1, 1]], dtype=np.int64)
        exclude = np.array([-1], dtype=np.int64)
        d2, idx = backend.neighbors(train, queries, 4, exclude)
        assert idx[0].tolist() == [1, 3, 0, 2]
        assert d2[0].tolist() == [0, 0, 8, 8]

    def test_exclusion_skips_exactly_that_index(self, backend):
        train = np.array([[1, 1], [1, 1], [2, 2]], dtype=np.int64)
        queries = np.array([[1, 1]], dtype=np.int64)
        d2, idx = backend.neighbors(train, queries, 2, np.array([0], dtype=np.int64))
        assert idx[0].tolist() == [1, 2]

    def test_kmax_equals_training_size(self, backend):
        train = np.array([[1], [2], [5]], dtype=np.int64)
        queries = np.array([[3]], dtype=np.int64)
        d2, idx = backend.neighbors(train, queries, 3, np.array([-1], dtype=np.int64))
        assert idx[0].tolist() == [1, 0, 2]
        assert d2[0].tolist() == [1, 4, 4]


def test_backends_agree_pairwise():
    names = _kernels.available_backends()
    if len(names) < 2:
        pytest.skip("only one backend available")
    rng = np.random.default_rng(5)
    train = rng.integers(1, 6, size=(80, 10)).astype(np.int64)
    queries = rng.integers(1, 6, size=(25, 10)).astype(np.int64)
    exclude = np.full(25, -1, dtype=np.int64)
    results = {}
    for name in names:
        _kernels.set_active(name)
        results[name] = _kernels.get_active().neighbors(train, queries, 12, exclude)
    base = results[names[0]]
    for name in names[1:]:
        np.testing.assert_array_equal(results[name][0], base[0])
        np.testing.assert_array_equal(results[name][1], base[1])
