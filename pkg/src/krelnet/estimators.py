"""PAC Monte Carlo drivers for a mean in [0, 1].

Each driver consumes a :class:`SampleStream` and returns an :class:`Estimate`
meeting Pr(|u_hat - u| / u >= eps) <= delta.

* ``sra``  - stopping rule algorithm (Dagum et al.)
* ``gbas`` - gamma Bernoulli approximation scheme (Huber), k from ``choose_k``
* ``aa``   - the three-step approximation algorithm (Dagum et al.)
* ``median_of_means`` - median of r sample means, for streams with known
  relative variance
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (ContractViolation, DegenerateMeanError, InvalidArgument, NumericError,
                     ResourceLimitError)
from .graph_model import NetworkInstance, evaluate_structure_batch
from .special import gammainc_lower

E_MINUS_2 = math.e - 2.0


@dataclass(frozen=True)
class PacParams:
    eps: float
    delta: float

    def __post_init__(self):
        for name in ("eps", "delta"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise InvalidArgument(f"{name} must lie in (0, 1), got {value}")


@dataclass
class Estimate:
    value: float
    params: PacParams | None
    samples_used: int
    elapsed: float
    method: str
    details: dict = field(default_factory=dict)


# -- entropy and streams ------------------------------------------------------

class Entropy:
    """Seeded source of uniforms and exponentials (counter-based Philox).

    ``Entropy(seed, index)`` gives an independent substream per replication
    index; ``spawn`` derives further independent children.
    """

    def __init__(self, seed=None, index=None, *, seed_sequence=None):
        if seed_sequence is None:
            entropy = seed if index is None else [seed, index]
            seed_sequence = np.random.SeedSequence(entropy)
        self.seed_sequence = seed_sequence
        self.rng = np.random.Generator(np.random.Philox(seed_sequence))

    def spawn(self, n: int) -> list[Entropy]:
        return [Entropy(seed_sequence=s) for s in self.seed_sequence.spawn(n)]

    def random(self, size) -> np.ndarray:
        """Uniforms on [0, 1)."""
        return self.rng.random(size)

    def uniform(self, n: int) -> np.ndarray:
        """Uniforms on (0, 1]."""
        return 1.0 - self.rng.random(n)

    def exponential(self, n: int) -> np.ndarray:
        # inverse transform on (0, 1] never hits log(0)
        return -np.log(self.uniform(n))


class SampleStream:
    """Buffered i.i.d. samples in [0, 1] produced by ``draw(n)``.

    Values are handed out strictly in generation order, so the consumed
    sequence does not depend on how callers batch their requests.
    ``drawn`` counts samples actually consumed.
    """

    def __init__(self, draw: Callable[[int], np.ndarray], block: int = 4096):
        self._draw = draw
        self._block = block
        self._buf = np.empty(0)
        self.drawn = 0

    def peek(self, n: int) -> np.ndarray:
        if len(self._buf) < n:
            extra = self._draw(max(n - len(self._buf), self._block))
            self._buf = np.concatenate([self._buf, np.asarray(extra, dtype=float)])
        return self._buf[:n]

    def consume(self, n: int) -> None:
        self._buf = self._buf[n:]
        self.drawn += n

    def take(self, n: int) -> np.ndarray:
        out = self.peek(n).copy()
        self.consume(n)
        return out

    def next(self) -> float:
        return float(self.take(1)[0])


def bernoulli_stream(p: float, entropy: Entropy, block: int = 4096) -> SampleStream:
    return SampleStream(lambda n: (entropy.random(n) < p).astype(float), block)


def constant_stream(c: float) -> SampleStream:
    return SampleStream(lambda n: np.full(n, float(c)))


def cmc_batch(instance: NetworkInstance, entropy: Entropy, n: int) -> np.ndarray:
    """n crude Monte Carlo indicators of the unsafe event."""
    fails = entropy.random((n, instance.m)) < instance.failure_probs
    return (~evaluate_structure_batch(instance, ~fails)).astype(float)


def cmc_sample(instance: NetworkInstance, entropy: Entropy) -> int:
    return int(cmc_batch(instance, entropy, 1)[0])


def cmc_stream(instance: NetworkInstance, entropy: Entropy, block: int = 1024) -> SampleStream:
    return SampleStream(lambda n: cmc_batch(instance, entropy, n), block)


def _check_unit_interval(values):
    if not np.all((values >= 0.0) & (values <= 1.0)):
        bad = values[~((values >= 0.0) & (values <= 1.0))][0]
        raise ContractViolation(f"sample {bad!r} lies outside [0, 1]")


def _running_sum(start: float, values: np.ndarray) -> np.ndarray:
    """start + cumulative sums, accumulated left to right exactly as a loop would."""
    return np.cumsum(np.concatenate(([start], values)))[1:]


# -- SRA ----------------------------------------------------------------------

def sra_constants(eps: float, delta: float) -> tuple[float, float]:
    upsilon = 4.0 * E_MINUS_2 * math.log(2.0 / delta) / eps ** 2
    return upsilon, 1.0 + (1.0 + eps) * upsilon


def sra(stream: SampleStream, params: PacParams, max_samples: int | None = None) -> Estimate:
    """Sum samples until the total reaches upsilon_1; return upsilon_1 / N."""
    _, threshold = sra_constants(params.eps, params.delta)
    start = time.perf_counter()
    total, n = 0.0, 0
    size = max(64, math.ceil(threshold))
    while True:
        block = stream.peek(size)
        _check_unit_interval(block)
        sums = _running_sum(total, block)
        hit = np.flatnonzero(sums >= threshold)
        if hit.size:
            j = int(hit[0])
            stream.consume(j + 1)
            n += j + 1
            total = float(sums[j])
            break
        stream.consume(size)
        n += size
        total = float(sums[-1])
        if max_samples is not None and n >= max_samples:
            raise ResourceLimitError(
                f"SRA drew {n} samples without reaching {threshold:.6g}; is the mean zero?")
        size = min(2 * size, 1 << 20)
    return Estimate(threshold / n, params, n, time.perf_counter() - start, "sra",
                    {"S": total, "upsilon1": threshold})


# -- GBAS ---------------------------------------------------------------------

def gbas_coverage(k: int, eps: float) -> float:
    """Pr(u_hat in u[1-eps, 1+eps]) for GBAS with parameter k.

    u / u_hat ~ Gamma(k, 1) / (k - 1), so the event is
    G in [(k-1)/(1+eps), (k-1)/(1-eps)].
    """
    lo = (k - 1) / (1.0 + eps)
    hi = (k - 1) / (1.0 - eps)
    return gammainc_lower(k, hi) - gammainc_lower(k, lo)


def choose_k(params: PacParams, k_max: int = 1 << 40) -> int:
    """Smallest k >= 2 whose GBAS coverage reaches 1 - delta.

    Galloping over powers of two, then bisection.
    """
    def ok(k):
        return gbas_coverage(k, params.eps) >= 1.0 - params.delta

    if ok(2):
        return 2
    lo, hi = 2, 4
    while not ok(hi):
        lo, hi = hi, 2 * hi
        if hi > k_max:
            raise NumericError(f"no k <= {k_max} meets eps={params.eps}, delta={params.delta}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def gbas(stream: SampleStream, k: int, entropy, params: PacParams | None = None,
         max_samples: int | None = None) -> Estimate:
    """Run until k Bernoulli successes; return (k - 1) / R.

    Each sample Y is thinned to B = 1[U <= Y] with U uniform on (0, 1], and R
    accumulates one Exp(1) draw per sample.
    """
    if k < 2:
        raise InvalidArgument(f"GBAS needs k >= 2, got {k}")
    start = time.perf_counter()
    successes, rate_sum, n = 0, 0.0, 0
    size = k
    while True:
        y = stream.peek(size)
        _check_unit_interval(y)
        u = entropy.uniform(size)
        expo = entropy.exponential(size)
        counts = successes + np.cumsum(u <= y)
        sums = _running_sum(rate_sum, expo)
        hit = np.flatnonzero(counts >= k)
        if hit.size:
            j = int(hit[0])
            stream.consume(j + 1)
            n += j + 1
            rate_sum = float(sums[j])
            break
        stream.consume(size)
        n += size
        successes = int(counts[-1])
        rate_sum = float(sums[-1])
        if max_samples is not None and n >= max_samples:
            raise ResourceLimitError(
                f"GBAS drew {n} samples with only {successes} of {k} successes")
        size = min(2 * size, 1 << 20)
    return Estimate((k - 1) / rate_sum, params, n, time.perf_counter() - start, "gbas",
                    {"k": k, "R": rate_sum})


# -- AA -----------------------------------------------------------------------

def aa_constants(eps: float, delta: float) -> tuple[float, float]:
    upsilon, _ = sra_constants(eps, delta)
    se = math.sqrt(eps)
    upsilon2 = (2.0 * (1.0 + se) * (1.0 + 2.0 * se)
                * (1.0 + math.log(1.5) / math.log(2.0 / delta)) * upsilon)
    return upsilon, upsilon2


def aa(cheap_stream: SampleStream, stream: SampleStream, params: PacParams) -> Estimate:
    """Three-step approximation algorithm.

    Step 1 gets a rough mean from ``cheap_stream`` with SRA(min(1/2, sqrt eps),
    delta/3); step 2 estimates the relative variance from paired samples of
    ``stream``; step 3 averages N_AA fresh samples. ``elapsed`` and
    ``samples_used`` cover step 3 only; the trial steps are in ``details``.
    """
    eps, delta = params.eps, params.delta
    rough = sra(cheap_stream, PacParams(min(0.5, math.sqrt(eps)), delta / 3.0))
    mu = rough.value
    if mu <= 0.0:
        raise DegenerateMeanError("step 1 produced a zero mean estimate")

    _, upsilon2 = aa_constants(eps, delta)
    n_pairs = math.ceil(upsilon2 * eps / mu)
    pairs = stream.take(2 * n_pairs)
    _check_unit_interval(pairs)
    diffs = pairs[0::2] - pairs[1::2]
    s = float(np.sum(diffs * diffs / 2.0))
    rel_var = max(s / n_pairs, eps * mu) / mu ** 2

    n_final = math.ceil(upsilon2 * rel_var)
    start = time.perf_counter()
    final = stream.take(n_final)
    _check_unit_interval(final)
    value = float(np.sum(final)) / n_final
    elapsed = time.perf_counter() - start
    return Estimate(value, params, n_final, elapsed, "aa",
                    {"mu_rough": mu, "step1_samples": rough.samples_used,
                     "step2_pairs": n_pairs, "variance_sum": s, "rel_var": rel_var,
                     "upsilon2": upsilon2})


# -- median of means ----------------------------------------------------------

def mom_repetitions(delta: float) -> int:
    """r = ceil(2 log(1/delta) / log(4/3)), the s = 3/4 case."""
    if not 0.0 < delta < 1.0:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(2.0 * math.log(1.0 / delta) / math.log(4.0 / 3.0))


def mom_sample_size(rel_var: float, eps: float, s: float = 0.75) -> int:
    """Per-experiment sample size n = sigma^2 / ((1 - s) eps^2 mu^2).

    ``rel_var`` is sigma^2 / mu^2, which the caller must know or bound.
    """
    if rel_var < 0 or not 0.5 < s < 1:
        raise InvalidArgument("need rel_var >= 0 and s in (1/2, 1)")
    return max(1, math.ceil(rel_var / ((1.0 - s) * eps ** 2)))


def lower_median(values) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def median_of_means(stream: SampleStream, n_per_experiment: int, delta: float,
                    params: PacParams | None = None) -> Estimate:
    if n_per_experiment < 1:
        raise InvalidArgument("n_per_experiment must be positive")
    r = mom_repetitions(delta)
    start = time.perf_counter()
    means = []
    for _ in range(r):
        block = stream.take(n_per_experiment)
        _check_unit_interval(block)
        means.append(float(np.sum(block)) / n_per_experiment)
    value = lower_median(means)
    return Estimate(value, params, r * n_per_experiment, time.perf_counter() - start, "mom",
                    {"r": r, "n": n_per_experiment, "means": means})
