import math
import threading

import numpy as np
import pytest

from swicert import matops
from swicert.errors import ConfigurationError
from swicert.family import SystemFamily, lipschitz_constant, synthesize_family
from swicert.siggen import RoundRobin, generate
from swicert.signal import SwitchingSignal
from swicert.simulator import ExpmCache, lipschitz_envelope_check, simulate, v_trace

from conftest import A1, A3


@pytest.fixture(scope="module")
def walk(fam4, graph4):
    rng = np.random.default_rng(12)
    cur, tau, idx = 1, [0.0], [1]
    for _ in range(60):
        cur = int(rng.choice(graph4.successors(cur)))
        tau.append(tau[-1] + rng.uniform(0.1, 2.0))
        idx.append(cur)
    return SwitchingSignal(tau, idx, tau[-1] + 0.5)


def test_scalar_decay():
    fam = SystemFamily.from_matrices([[[-1.0]]])
    traj = simulate(fam, SwitchingSignal([0.0], [1], 1.0), [1.0])
    assert traj.times[-1] == 1.0
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1), rel=1e-14)


def test_alternation_does_not_converge():
    fam = SystemFamily.from_matrices([[[1.0]], [[-1.0]]])
    sig = generate(RoundRobin((1, 2), 1.0, 200.0))
    traj = simulate(fam, sig, [1.0], samples_per_hold=4)
    for n in range(1, 101):
        assert traj.state_at(2.0 * n)[0] == pytest.approx(1.0, abs=1e-9)


def test_switch_instants_sampled(fam4, walk):
    traj = simulate(fam4, walk, [1.0, 2.0])
    assert set(walk.instants.tolist()) <= set(traj.times.tolist())
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == walk.horizon


def test_hold_propagation(fam4, walk):
    traj = simulate(fam4, walk, [1.0, 2.0])
    for i in range(walk.n_switches):
        a = fam4[int(walk.indices[i])].A
        s = walk.instants[i + 1] - walk.instants[i]
        want = matops.expm(a, s) @ traj.state_at(walk.instants[i])
        got = traj.state_at(walk.instants[i + 1])
        assert np.linalg.norm(got - want) <= 1e-9 * max(1.0, np.linalg.norm(want))


def test_semigroup_restart(fam4, walk):
    full = simulate(fam4, walk, [-3.0, 1.0])
    k = 25
    tk = float(walk.instants[k])
    head = SwitchingSignal(walk.instants[k:] - tk, walk.indices[k:], walk.horizon - tk)
    tail = simulate(fam4, head, full.state_at(tk))
    for i in range(1, head.n_switches + 1):
        ref = full.state_at(float(walk.instants[k + i]))
        x = tail.state_at(float(head.instants[i]))
        assert np.linalg.norm(x - ref) <= 1e-9 * max(1.0, np.linalg.norm(ref))
    assert np.linalg.norm(tail.states[-1] - full.states[-1]) <= 1e-9 * np.linalg.norm(full.states[-1])


def test_linearity(fam4, walk):
    x0 = np.array([0.3, -0.7])
    base = simulate(fam4, walk, x0)
    for alpha in (-2.5, 1e-3, 1e4):
        scaled = simulate(fam4, walk, alpha * x0)
        assert np.allclose(scaled.states, alpha * base.states, rtol=1e-10, atol=0)


def test_zero_state(fam4, walk):
    traj = simulate(fam4, walk, [0.0, 0.0])
    assert not np.any(traj.states)
    assert lipschitz_envelope_check(traj, lipschitz_constant(fam4))


def test_dimension_mismatch(fam4, walk):
    with pytest.raises(ConfigurationError):
        simulate(fam4, walk, [1.0, 2.0, 3.0])


def test_unknown_index(fam4):
    with pytest.raises(ConfigurationError):
        simulate(fam4, SwitchingSignal([0.0, 1.0], [1, 7], 2.0), [1.0, 0.0])


def test_deterministic(fam4, walk):
    a = simulate(fam4, walk, [1.0, 1.0], cache=ExpmCache())
    b = simulate(fam4, walk, [1.0, 1.0], cache=ExpmCache())
    assert np.array_equal(a.states, b.states)


def test_cache_reuse():
    fam = SystemFamily.from_matrices([A1, A3])
    cache = ExpmCache()
    simulate(fam, generate(RoundRobin((1, 2), 1.0, 100.0)), [1.0, 0.0], samples_per_hold=4, cache=cache)
    # one full-hold and one sub-hold exponential per system
    assert len(cache) == 4


def test_cache_shared_across_threads(fam4, walk):
    cache = ExpmCache()
    ref = simulate(fam4, walk, [1.0, -1.0], cache=ExpmCache())
    out = [None] * 6

    def run(k):
        out[k] = simulate(fam4, walk, [1.0, -1.0], cache=cache)

    threads = [threading.Thread(target=run, args=(k,)) for k in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(o.states, ref.states) for o in out)


class TestLipschitz:
    def test_example_trajectory(self, fam4, walk):
        traj = simulate(fam4, walk, [-1000.0, 1000.0])
        assert lipschitz_envelope_check(traj, 0.53983)

    def test_corrupted_constant(self):
        fam = SystemFamily.from_matrices([[[0.5]]])
        traj = simulate(fam, SwitchingSignal([0.0], [1], 5.0), [1.0])
        assert lipschitz_envelope_check(traj, 0.5)
        assert not lipschitz_envelope_check(traj, 0.0)


class TestVTrace:
    def test_identity_gives_squared_norm(self, fam4, pairs4):
        pairs = {j: p for j, p in pairs4.items() if j != 1}
        sub = SwitchingSignal([0.0, 1.0, 2.0], [3, 2, 4], 3.0)
        traj = simulate(fam4, sub, [2.0, -1.0])
        assert np.allclose(v_trace(traj, pairs), traj.norms() ** 2, rtol=1e-14)

    def test_stable_decay(self, fam4, pairs4):
        sig = SwitchingSignal([0.0], [1], 30.0)
        traj = simulate(fam4, sig, [1.0, 1.0], samples_per_hold=100)
        v = v_trace(traj, pairs4)
        assert np.all(v <= v[0] * np.exp(-pairs4[1].lam * traj.times) * (1 + 1e-9))

    def test_jump_bounded_by_mu(self, fam4, walk, pairs4, mu4):
        traj = simulate(fam4, walk, [2.0, -1.0])
        for i in range(1, walk.n_switches + 1):
            k, l = int(walk.indices[i - 1]), int(walk.indices[i])
            x = traj.state_at(walk.instants[i])
            assert pairs4[l].V(x) <= mu4.get((k, l)) * pairs4[k].V(x) * (1 + 1e-12)

    def test_missing_pair(self, fam4, walk):
        traj = simulate(fam4, walk, [1.0, 0.0])
        pairs = synthesize_family(SystemFamily.from_matrices([A1]))
        with pytest.raises(ConfigurationError):
            v_trace(traj, pairs)


def test_csv_header(fam4, walk, pairs4):
    traj = simulate(fam4, walk, [1.0, 0.0])
    text = traj.to_csv(pairs4, np.ones(len(traj.times)))
    lines = text.splitlines()
    assert lines[0] == "t,sigma,x_1,x_2,V,psi_bound"
    assert len(lines) == len(traj.times) + 1
    assert simulate(fam4, walk, [1.0, 0.0]).to_csv().splitlines()[0] == "t,sigma,x_1,x_2"
