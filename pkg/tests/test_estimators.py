import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import instance
from krelnet import estimators as est
from krelnet.errors import (ContractViolation, DegenerateMeanError, InvalidArgument,
                            ResourceLimitError)

mpmath.mp.dps = 50
P20 = est.PacParams(0.2, 0.2)


def oracle_sra_upsilon1(eps, delta):
    eps, delta = mpmath.mpf(eps), mpmath.mpf(delta)
    ups = 4 * (mpmath.e - 2) * mpmath.log(2 / delta) / eps ** 2
    return ups, 1 + (1 + eps) * ups


def oracle_coverage(k, eps):
    eps = mpmath.mpf(eps)
    return mpmath.gammainc(k, (k - 1) / (1 + eps), (k - 1) / (1 - eps), regularized=True)


class StubEntropy:
    def __init__(self, uniforms, exponentials):
        self.u = list(uniforms)
        self.e = list(exponentials)

    def uniform(self, n):
        out, self.u = self.u[:n], self.u[n:]
        return np.array(out + [1.0] * (n - len(out)))

    def exponential(self, n):
        out, self.e = self.e[:n], self.e[n:]
        return np.array(out + [1.0] * (n - len(out)))


class TestParams:
    @pytest.mark.parametrize("eps, delta", [(0, 0.1), (1, 0.1), (0.1, 0), (0.1, 1), (-1, 2)])
    def test_open_interval(self, eps, delta):
        with pytest.raises(InvalidArgument):
            est.PacParams(eps, delta)


class TestStreams:
    def test_same_seed_same_sequence(self):
        a = est.bernoulli_stream(0.3, est.Entropy(5, 2))
        b = est.bernoulli_stream(0.3, est.Entropy(5, 2))
        assert np.array_equal(a.take(1000), b.take(1000))

    def test_indices_differ(self):
        a = est.Entropy(5, 1).random(50)
        b = est.Entropy(5, 2).random(50)
        assert not np.array_equal(a, b)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(1, 300), min_size=1, max_size=12))
    def test_batching_does_not_change_values(self, sizes):
        whole = est.bernoulli_stream(0.4, est.Entropy(11), block=64).take(sum(sizes))
        s = est.bernoulli_stream(0.4, est.Entropy(11), block=64)
        parts = []
        for n in sizes:
            s.peek(n + 3)
            parts.append(s.take(n))
        assert np.array_equal(np.concatenate(parts), whole)
        assert s.drawn == sum(sizes)

    def test_next_and_constant(self):
        s = est.constant_stream(0.25)
        assert s.next() == 0.25 and s.drawn == 1

    def test_uniform_excludes_zero(self):
        u = est.Entropy(0).uniform(100000)
        assert u.min() > 0.0 and u.max() <= 1.0
        assert np.all(np.isfinite(est.Entropy(0).exponential(1000)))


class TestCmc:
    def test_never_fails(self):
        inst = instance("uv", [("u", "v", "0")], "uv")
        assert est.cmc_batch(inst, est.Entropy(1), 500).sum() == 0

    def test_always_fails(self):
        inst = instance("uv", [("u", "v", "1")], "uv")
        assert est.cmc_batch(inst, est.Entropy(1), 500).sum() == 500
        assert est.cmc_sample(inst, est.Entropy(2)) == 1

    def test_diamond_mean(self, diamond):
        n = 100000
        mean = est.cmc_batch(diamond, est.Entropy(3), n).mean()
        u = 33 / 64
        assert abs(mean - u) <= 3 * math.sqrt(u * (1 - u) / n)


class TestSra:
    def test_constants_against_oracle(self):
        ups, ups1 = est.sra_constants(0.2, 0.2)
        o_ups, o_ups1 = oracle_sra_upsilon1(0.2, 0.2)
        assert ups == pytest.approx(float(o_ups), rel=1e-14)
        assert ups1 == pytest.approx(float(o_ups1), rel=1e-14)

    def test_constant_one(self):
        e = est.sra(est.constant_stream(1.0), P20)
        _, ups1 = est.sra_constants(0.2, 0.2)
        assert e.samples_used == math.ceil(ups1)
        assert e.value == pytest.approx(ups1 / math.ceil(ups1), rel=1e-15)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.05, 1.0), st.integers(0, 2 ** 32))
    def test_stopping_contract(self, p, seed):
        stream = est.SampleStream(lambda n, g=est.Entropy(seed): g.random(n) * p)
        e = est.sra(stream, P20)
        total = e.details["S"]
        ups1 = e.details["upsilon1"]
        assert total >= ups1
        assert e.value * e.samples_used == pytest.approx(ups1, rel=1e-12)
        # the last sample pushed the sum over the threshold
        replay = est.SampleStream(lambda n, g=est.Entropy(seed): g.random(n) * p)
        ys = replay.take(e.samples_used)
        assert float(np.sum(ys[:-1])) < ups1

    def test_rejects_out_of_range(self):
        with pytest.raises(ContractViolation):
            est.sra(est.constant_stream(1.5), P20)

    def test_zero_mean_hits_limit(self):
        with pytest.raises(ResourceLimitError):
            est.sra(est.constant_stream(0.0), P20, max_samples=10000)


class TestGbas:
    def test_stub_trace(self):
        e = est.gbas(est.constant_stream(1.0), 2, StubEntropy([0.5, 0.5], [0.7, 1.3]))
        assert e.samples_used == 2
        assert e.details["R"] == pytest.approx(2.0)
        assert e.value == pytest.approx(0.5)

    def test_thinning_skips_failures(self):
        # Y = 0.3: a uniform of 0.9 is rejected, 0.1 accepted
        ent = StubEntropy([0.9, 0.1, 0.9, 0.2], [1.0, 1.0, 1.0, 1.0])
        e = est.gbas(est.constant_stream(0.3), 2, ent)
        assert e.samples_used == 4
        assert e.value == pytest.approx(1 / 4)

    @pytest.mark.parametrize("eps, delta, k", [(0.2, 0.2, 41), (0.2, 0.05, 97),
                                               (0.1, 0.2, 164)])
    def test_choose_k_frozen(self, eps, delta, k):
        assert est.choose_k(est.PacParams(eps, delta)) == k

    @pytest.mark.parametrize("eps, delta", [(0.2, 0.2), (0.2, 0.05), (0.3, 0.1), (0.1, 0.05)])
    def test_choose_k_is_smallest(self, eps, delta):
        k = est.choose_k(est.PacParams(eps, delta))
        assert oracle_coverage(k, eps) >= 1 - delta
        assert oracle_coverage(k - 1, eps) < 1 - delta

    def test_choose_k_monotone_in_delta(self):
        ks = [est.choose_k(est.PacParams(0.2, d)) for d in (0.4, 0.2, 0.1, 0.05, 0.01)]
        assert ks == sorted(ks)

    def test_coverage_against_oracle(self):
        for k in (2, 10, 41, 500):
            assert est.gbas_coverage(k, 0.2) == pytest.approx(float(oracle_coverage(k, 0.2)),
                                                              abs=1e-12)

    def test_k_below_two(self):
        with pytest.raises(InvalidArgument):
            est.gbas(est.constant_stream(1.0), 1, est.Entropy(0))

    def test_draws_at_least_k(self):
        ent = est.Entropy(9)
        e = est.gbas(est.bernoulli_stream(0.3, ent.spawn(1)[0]), 41, ent, P20)
        assert e.samples_used >= 41 and e.details["R"] > 0

    def test_zero_mean_hits_limit(self):
        with pytest.raises(ResourceLimitError):
            est.gbas(est.constant_stream(0.0), 5, est.Entropy(0), max_samples=1000)


class TestAa:
    def test_constants_against_oracle(self):
        eps, delta = mpmath.mpf("0.2"), mpmath.mpf("0.2")
        ups, _ = oracle_sra_upsilon1(eps, delta)
        se = mpmath.sqrt(eps)
        ups2 = 2 * (1 + se) * (1 + 2 * se) * (1 + mpmath.log(1.5) / mpmath.log(2 / delta)) * ups
        assert est.aa_constants(0.2, 0.2)[1] == pytest.approx(float(ups2), rel=1e-13)

    def test_constant_stream_floor_branch(self):
        e = est.aa(est.constant_stream(0.5), est.constant_stream(0.5), P20)
        mu = e.details["mu_rough"]
        assert e.details["variance_sum"] == 0.0
        assert e.details["rel_var"] == pytest.approx(0.2 * mu / mu ** 2, rel=1e-15)
        assert e.value == 0.5
        assert e.samples_used == math.ceil(e.details["upsilon2"] * e.details["rel_var"])

    def test_step_three_accounting(self):
        cheap = est.bernoulli_stream(0.3, est.Entropy(1))
        main = est.bernoulli_stream(0.3, est.Entropy(2))
        e = est.aa(cheap, main, P20)
        assert main.drawn == 2 * e.details["step2_pairs"] + e.samples_used
        assert cheap.drawn == e.details["step1_samples"]

    def test_degenerate(self, monkeypatch):
        # SRA never returns zero on its own, so stub step 1
        zero = est.Estimate(0.0, P20, 1, 0.0, "sra")
        monkeypatch.setattr(est, "sra", lambda stream, params: zero)
        with pytest.raises(DegenerateMeanError):
            est.aa(est.constant_stream(0.0), est.constant_stream(0.0), P20)


class TestMedianOfMeans:
    def test_repetitions(self):
        assert est.mom_repetitions(0.2) == 12
        assert est.mom_repetitions(0.2) == math.ceil(2 * math.log(5) / math.log(4 / 3))

    def test_sample_size(self):
        assert est.mom_sample_size(1.0, 0.3) == math.ceil(1 / (0.25 * 0.09))
        assert est.mom_sample_size(0.0, 0.3) == 1
        with pytest.raises(InvalidArgument):
            est.mom_sample_size(1.0, 0.3, s=0.4)

    def test_lower_median(self):
        assert est.lower_median([1, 2, 3]) == 2
        assert est.lower_median([4, 1, 3, 2]) == 2

    def test_output_is_a_mean(self):
        e = est.median_of_means(est.bernoulli_stream(0.3, est.Entropy(4)), 50, 0.2)
        assert e.details["r"] == 12 and e.samples_used == 600
        assert e.value in e.details["means"]

    def test_bad_n(self):
        with pytest.raises(InvalidArgument):
            est.median_of_means(est.constant_stream(0.5), 0, 0.2)


def test_estimators_are_deterministic():
    def run(seed):
        ent = est.Entropy(seed)
        main, aux, cheap = ent.spawn(3)
        return (est.gbas(est.bernoulli_stream(0.2, main), 41, aux, P20).value,
                est.sra(est.bernoulli_stream(0.2, cheap), P20).value)
    assert run(17) == run(17)
    assert run(17) != run(18)
