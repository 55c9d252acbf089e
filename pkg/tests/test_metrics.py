import numpy as np
import pytest

from rfscontrol.metrics import OspaParams, ospa

P1 = OspaParams(cutoff=100.0, order=1.0)
P2 = OspaParams(cutoff=100.0, order=2.0)


class TestOspaBoundaries:
    def test_identical_singletons(self):
        assert ospa([[1.0, 2.0]], [[1.0, 2.0]], P2) == 0.0

    def test_both_empty(self):
        assert ospa([], [], P2) == 0.0

    def test_empty_vs_n_targets_is_cutoff(self):
        truth = [[0.0, 0.0], [10.0, 10.0], [20.0, 0.0]]
        assert ospa([], truth, P2) == P2.cutoff

    def test_hand_geometry_below_cutoff(self):
        assert ospa([[0.0, 0.0]], [[3.0, 4.0]], P1) == pytest.approx(5.0)

    def test_distance_saturates_at_cutoff(self):
        assert ospa([[0.0, 0.0]], [[1e6, 1e6]], P2) == pytest.approx(P2.cutoff)

    def test_cardinality_penalty(self):
        # one matched pair at distance 0 plus one unmatched: [(0 + c^p)/2]^(1/p)
        value = ospa([[0.0, 0.0]], [[0.0, 0.0], [500.0, 0.0]], P2)
        assert value == pytest.approx(100.0 / np.sqrt(2.0))


class TestOspaProperties:
    def test_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.uniform(-500, 500, size=(rng.integers(0, 5), 2))
            y = rng.uniform(-500, 500, size=(rng.integers(0, 5), 2))
            assert ospa(x, y, P2) == pytest.approx(ospa(y, x, P2), abs=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            x, y, z = (rng.uniform(-200, 200, size=(rng.integers(0, 5), 2))
                       for _ in range(3))
            dxz = ospa(x, z, P2)
            dxy = ospa(x, y, P2)
            dyz = ospa(y, z, P2)
            assert dxz <= dxy + dyz + 1e-9

    def test_bounded_by_cutoff(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.uniform(-5000, 5000, size=(rng.integers(0, 6), 2))
            y = rng.uniform(-5000, 5000, size=(rng.integers(0, 6), 2))
            assert ospa(x, y, P2) <= P2.cutoff + 1e-12

    def test_enum_equals_solver(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            x = rng.uniform(-300, 300, size=(rng.integers(1, 7), 2))
            y = rng.uniform(-300, 300, size=(rng.integers(1, 7), 2))
            enum = ospa(x, y, P2, assignment="enum")
            solver = ospa(x, y, P2, assignment="solver")
            assert enum == pytest.approx(solver, abs=1e-12)


class TestOspaParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            OspaParams(cutoff=0.0)
        with pytest.raises(ValueError):
            OspaParams(order=0.5)
