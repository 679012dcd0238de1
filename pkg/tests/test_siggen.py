import numpy as np
import pytest

from swicert.densities import Expression, SignalProfile
from swicert.errors import ConfigurationError, InsufficientSwitches
from swicert.siggen import (
    Fixed,
    ProfileTracking,
    RandomWalk,
    RoundRobin,
    UniformRange,
    generate,
    inverse_count,
    transition_residuals,
)
from swicert.signal import HFunction, TransitionGraph, switch_count, validate_signal

PAIR = TransitionGraph.from_edges([(1, 2), (2, 1)])


@pytest.fixture(scope="module")
def tracked(profile4, graph4):
    return generate(ProfileTracking(profile4, graph4, 1e5, 1))


class TestRoundRobin:
    def test_alternation(self):
        sig = generate(RoundRobin((1, 2), 1.0, 100.0))
        assert np.array_equal(sig.instants, np.arange(101.0))
        assert sig.indices.tolist() == [1 + (i % 2) for i in range(101)]
        assert validate_signal(sig, PAIR) == []

    def test_three_cycle(self):
        spec = RoundRobin((1, 2, 3), 0.5, 10.0)
        sig = generate(spec)
        assert sig.n_switches == 20
        assert validate_signal(sig, spec.graph) == []

    @pytest.mark.parametrize("cycle", [(1,), (1, 1, 2), (1, 2, 1)])
    def test_invalid_cycles(self, cycle):
        with pytest.raises(ConfigurationError):
            RoundRobin(cycle, 1.0, 10.0)

    def test_nonpositive_hold(self):
        with pytest.raises(ConfigurationError):
            RoundRobin((1, 2), 0.0, 10.0)


class TestRandomWalk:
    def test_forced_walk_equals_alternation(self):
        walk = generate(RandomWalk(PAIR, Fixed(1.0), seed=99, horizon=100.0))
        assert walk == generate(RoundRobin((1, 2), 1.0, 100.0))

    def test_seed_determinism(self, graph4):
        spec = RandomWalk(graph4, UniformRange(0.5, 4.0), seed=2**63 - 5, horizon=5000.0)
        assert generate(spec).to_csv() == generate(spec).to_csv()

    def test_seeds_differ(self, graph4):
        a = generate(RandomWalk(graph4, UniformRange(0.5, 4.0), 1, 500.0))
        b = generate(RandomWalk(graph4, UniformRange(0.5, 4.0), 2, 500.0))
        assert a != b

    def test_admissible(self, graph4):
        for seed in range(5):
            sig = generate(RandomWalk(graph4, UniformRange(0.1, 2.0), seed, 2000.0, start=3))
            assert sig.indices[0] == 3
            assert validate_signal(sig, graph4) == []

    def test_dead_end_rejected(self):
        g = TransitionGraph.from_edges([(1, 2)])
        with pytest.raises(ConfigurationError):
            RandomWalk(g, Fixed(1.0), 0, 10.0)


class TestInverseCount:
    def test_linear(self):
        n = Expression(((0.5, 1.0, 0),))
        t = inverse_count(n, [1, 2, 10], 100.0)
        assert np.allclose(t, [2.0, 4.0, 20.0], atol=1e-7)

    def test_extends_bracket(self):
        n = Expression(((1.0, 0.5, 0),))
        assert inverse_count(n, [30], 1.0)[0] == pytest.approx(900.0, rel=1e-9)


class TestProfileTracking:
    def test_admissible(self, tracked, graph4):
        assert validate_signal(tracked, graph4) == []

    def test_deterministic(self, profile4, graph4):
        spec = ProfileTracking(profile4, graph4, 2e4, 1)
        assert generate(spec).to_csv() == generate(spec).to_csv()

    def test_count_tracks_profile(self, tracked, profile4):
        grid = np.linspace(100.0, tracked.horizon, 500)
        for t in grid:
            target = profile4.N(t)
            assert abs(switch_count(tracked, t) - target) <= 0.01 * target + 10

    def test_transition_shares(self, tracked, profile4):
        res = transition_residuals(tracked, profile4)
        assert max(abs(r) for r in res.values()) <= 2 / tracked.n_switches

    def test_too_few_switches(self):
        prof = SignalProfile(HFunction.identity(), Expression(((1e-3, 1.0, 0),)),
                             rho={(1, 2): 0.5, (2, 1): 0.5})
        with pytest.raises(InsufficientSwitches):
            generate(ProfileTracking(prof, PAIR, 100.0, 1))

    def test_target_edge_missing(self, profile4):
        with pytest.raises(ConfigurationError):
            generate(ProfileTracking(profile4, PAIR, 1e3, 1))

    def test_bad_start(self, profile4, graph4):
        with pytest.raises(ConfigurationError):
            generate(ProfileTracking(profile4, graph4, 1e3, 9))
