import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadekit import measures as ms
from cascadekit.errors import InputError, OutsideSupportError, ResourceGuardError
from cascadekit.measures import Bernoulli, Markov, Mixture, Uniform
from cascadekit.symbolic import parse_word

MIX = Mixture(((0.3, Bernoulli((0.5, 0.5))), (0.7, Bernoulli((0.9, 0.1)))))
SYM = Markov.stationary([[0.9, 0.1], [0.1, 0.9]])


def brute_markov_mass(P, init, order, u):
    """Direct product formula, no automaton."""
    b = len(P[0])
    if len(u) < order:
        return sum(init[w] for w in range(b**order) if _digits(w, b, order)[: len(u)] == tuple(u))
    w0 = 0
    for j in u[:order]:
        w0 = w0 * b + j
    mass = init[w0]
    for k in range(order, len(u)):
        w = 0
        for j in u[k - order : k]:
            w = w * b + j
        mass *= P[w][u[k]]
    return mass


def _digits(w, b, order):
    out = []
    for _ in range(order):
        out.append(w % b)
        w //= b
    return tuple(reversed(out))


def test_cylinder_examples():
    assert ms.cylinder_mass(Uniform(2), parse_word("0101", 2)) == pytest.approx(0.0625, abs=1e-15)
    assert ms.cylinder_mass(Bernoulli((0.7, 0.3)), (0, 1)) == pytest.approx(0.21, abs=1e-15)
    assert ms.cylinder_mass(MIX, (0,)) == pytest.approx(0.78, abs=1e-15)
    for m in (Uniform(3), Bernoulli((0.2, 0.8)), SYM, MIX):
        assert ms.cylinder_mass(m, ()) == 1.0


def test_validation():
    with pytest.raises(InputError, match="sums to 1.1"):
        Bernoulli((0.5, 0.6))
    with pytest.raises(InputError):
        Markov([[0.5, 0.6], [0.5, 0.5]], (0.5, 0.5))
    with pytest.raises(InputError):
        Mixture(((0.5, MIX), (0.5, Uniform(2))))
    with pytest.raises(InputError):
        Mixture(((0.5, Uniform(2)), (0.4, Uniform(2))))
    with pytest.raises(InputError):
        Mixture(((0.5, Uniform(2)), (0.5, Uniform(3))))
    with pytest.raises(InputError):
        ms.cylinder_mass(Uniform(2), (0, 2))


def test_markov_masses_match_product_formula():
    rng = np.random.default_rng(5)
    for order in (1, 2):
        b = 3
        P = rng.dirichlet(np.ones(b), size=b**order)
        init = rng.dirichlet(np.ones(b**order))
        m = Markov(P.tolist(), init.tolist(), order)
        for n in range(0, 5):
            for u in product(range(b), repeat=n):
                assert ms.cylinder_mass(m, u) == pytest.approx(brute_markov_mass(P, init, order, u), rel=1e-12, abs=1e-300)


def _random_model(draw_seed, kind, b):
    rng = np.random.default_rng(draw_seed)
    if kind == "uniform":
        return Uniform(b)
    if kind == "bernoulli":
        return Bernoulli(tuple(rng.dirichlet(np.ones(b))))
    if kind == "markov":
        order = 1 + draw_seed % 2
        P = rng.dirichlet(np.ones(b), size=b**order)
        P[0, 0] = 0.0  # exercise zero transitions
        P[0] /= P[0].sum()
        return Markov.stationary(P.tolist(), order)
    comps = (Bernoulli(tuple(rng.dirichlet(np.ones(b)))), Markov.stationary(rng.dirichlet(np.ones(b), size=b).tolist()))
    w = rng.uniform(0.1, 0.9)
    return Mixture(((w, comps[0]), (1 - w, comps[1])))


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 10**6),
    st.sampled_from(["uniform", "bernoulli", "markov", "mixture"]),
    st.sampled_from([2, 3]),
    st.data(),
)
def test_additivity(seed, kind, b, data):
    m = _random_model(seed, kind, b)
    n = data.draw(st.integers(0, 12))
    u = tuple(data.draw(st.lists(st.integers(0, b - 1), min_size=n, max_size=n)))
    total = sum(ms.cylinder_mass(m, u + (j,)) for j in range(b))
    assert total == pytest.approx(ms.cylinder_mass(m, u), abs=1e-12)


def test_sample_prefix_examples():
    rng = np.random.default_rng(0)
    assert all(ms.sample_prefix(Bernoulli((1.0, 0.0)), 4, rng) == (0, 0, 0, 0) for _ in range(20))
    draws = ms.sample_prefixes(Uniform(2), 2, 100_000, rng)
    codes = draws[:, 0] * 2 + draws[:, 1]
    freq = np.bincount(codes, minlength=4) / draws.shape[0]
    se = math.sqrt(0.25 * 0.75 / draws.shape[0])
    assert np.all(np.abs(freq - 0.25) <= 3 * se)
    absorbing = Markov([[1.0, 0.0], [0.0, 1.0]], (0.5, 0.5))
    d = ms.sample_prefixes(absorbing, 3, 10_000, rng)
    assert set(map(tuple, d.tolist())) <= {(0, 0, 0), (1, 1, 1)}
    assert abs(d[:, 0].mean() - 0.5) < 4 * math.sqrt(0.25 / 10_000)


@pytest.mark.parametrize("m", [Bernoulli((0.7, 0.3)), SYM, MIX, Markov.stationary([[0.2, 0.5, 0.3]] * 3 + [[0.6, 0.2, 0.2]] * 6, 2)])
def test_sample_prefix_consistency(m):
    rng = np.random.default_rng(11)
    N = 100_000
    d = ms.sample_prefixes(m, 3, N, rng)
    b = m.b
    codes = (d[:, 0] * b + d[:, 1]) * b + d[:, 2]
    freq = np.bincount(codes, minlength=b**3) / N
    for idx, u in enumerate(product(range(b), repeat=3)):
        p = ms.cylinder_mass(m, u)
        se = math.sqrt(max(p * (1 - p), 1e-12) / N)
        assert abs(freq[idx] - p) <= 4 * se


def test_entropy_examples():
    assert ms.entropy(Uniform(2)) == pytest.approx(math.log(2), abs=1e-15)
    oracle = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
    assert ms.entropy(Bernoulli((0.7, 0.3))) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(0.610864, abs=1e-6)
    P = np.array([[0.9, 0.1], [0.1, 0.9]])
    oracle_m = -(0.5 * (P * np.log(P)).sum())
    assert ms.entropy(SYM) == pytest.approx(oracle_m, abs=1e-12)
    assert oracle_m == pytest.approx(0.325083, abs=1e-6)
    with pytest.raises(InputError, match="entropy undefined for non-ergodic mixture; query components"):
        ms.entropy(MIX)


def test_markov_entropy_general_eigenvector_oracle():
    P = np.array([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8], [0.6, 0.0, 0.4]])
    vals, vecs = np.linalg.eig(P.T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    pi /= pi.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log(P), 0)
    assert ms.entropy(Markov.stationary(P.tolist())) == pytest.approx(-(pi[:, None] * plogp).sum(), abs=1e-12)


def test_markov_non_ergodic_entropy_rejected():
    with pytest.raises(InputError, match="not ergodic"):
        ms.entropy(Markov([[1.0, 0.0], [0.0, 1.0]], (0.5, 0.5)))


def test_local_dimension_examples():
    rng = np.random.default_rng(3)
    x = ms.sample_prefix(Uniform(2), 10, rng)
    assert ms.local_dimension_trace(Uniform(2), x, range(1, 11)) == pytest.approx([math.log(2)] * 10, abs=1e-14)
    tr = ms.local_dimension_trace(Bernoulli((0.7, 0.3)), (0,) * 10, [10])
    assert tr[0] == pytest.approx(-math.log(0.7), abs=1e-14)
    with pytest.raises(OutsideSupportError):
        ms.local_dimension_trace(Bernoulli((1.0, 0.0)), (0, 1), [2])


@pytest.mark.parametrize("m", [Bernoulli((0.7, 0.3)), SYM])
def test_smb_convergence(m):
    rng = np.random.default_rng(17)
    x = ms.sample_prefixes(m, 2000, 200, rng)
    h = -ms.prefix_log_masses(m, x)[:, -1] / 2000
    assert np.mean(np.abs(h - ms.entropy(m)) <= 0.05) >= 0.95


def test_lq_examples():
    for n in (1, 5, 40):
        assert ms.lq_sum(Bernoulli((0.5, 0.5)), 2, n) == pytest.approx(math.log(2), abs=1e-14)
        assert ms.lq_sum(Bernoulli((0.7, 0.3)), 2, n) == pytest.approx(-math.log(0.58), abs=1e-13)
    assert -math.log(0.58) == pytest.approx(0.544727, abs=1e-6)
    for m in (Uniform(3), SYM, MIX):
        assert ms.lq_sum(m, 1, 7) == 0.0
    with pytest.raises(ResourceGuardError):
        ms.lq_sum(MIX, 2, 25)


@pytest.mark.parametrize("m", [Bernoulli((0.7, 0.3)), SYM, MIX, Markov.stationary([[0.2, 0.8], [0.7, 0.3], [0.5, 0.5], [0.9, 0.1]], 2)])
def test_lq_matches_enumeration(m):
    for q in (0.0, 0.5, 2.0, 4.0):
        lm = ms.enumerate_log_masses(m, 10)
        lm = lm[np.isfinite(lm)]
        brute = -np.log(np.sum(np.exp(q * lm))) / 10
        assert ms.lq_sum(m, q, 10) == pytest.approx(brute, abs=1e-11)


@pytest.mark.parametrize("m", [Bernoulli((0.7, 0.3)), SYM, MIX, Uniform(3)])
def test_lq_monotone_in_q(m):
    vals = [ms.lq_sum(m, q, 8) for q in (0, 0.5, 1, 2, 4)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
