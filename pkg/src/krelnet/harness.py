"""Experiment harness: replicated runs, external counters, and report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import estimators as est
from .encoder import (DEFAULT_COUNT_LIMIT, count_to_unreliability, emit_dimacs, encode,
                      exact_projected_count)
from .errors import CounterError, InvalidArgument
from .graph_model import NetworkInstance, TerminalPattern, load_instance, make_grid
from .metrics import observed_error
from .oracle import DEFAULT_EDGE_LIMIT, exact_unreliability
from .transform import unweight

log = logging.getLogger(__name__)

METHODS = ("exact", "gbas", "sra", "aa", "mom", "relnet")
DEFAULT_TIMEOUT = 600.0
# failure probabilities 2^-i for the grid sweeps
DEFAULT_P_EXPONENTS = (1, 3, 5, 7, 9, 11, 13, 15)


@dataclass
class ExperimentConfig:
    method: str
    instance: str | None = None   # path to an instance file
    grid: dict | None = None      # {"side": 3, "pattern": "two", "p": "1/8"}
    eps: float = 0.2
    delta: float = 0.2
    replications: int = 1
    seed: int = 0
    counter_cmd: str | None = None
    timeout: float = DEFAULT_TIMEOUT
    count_limit: int = DEFAULT_COUNT_LIMIT
    mom_n: int | None = None
    max_samples: int | None = None
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"unknown method {self.method!r}; choose from {METHODS}")
        if (self.instance is None) == (self.grid is None):
            raise InvalidArgument("give exactly one of 'instance' and 'grid'")
        if self.replications < 1:
            raise InvalidArgument("replications must be at least 1")
        if self.method != "exact":
            est.PacParams(self.eps, self.delta)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def load(self) -> tuple[str, NetworkInstance]:
        if self.instance is not None:
            return Path(self.instance).stem, load_instance(self.instance)
        g = self.grid
        pattern = TerminalPattern(g.get("pattern", "two"))
        p = Fraction(str(g["p"]))
        ident = f"grid:side={g['side']},pattern={pattern.value},p={p}"
        return ident, make_grid(int(g["side"]), pattern, p)


@dataclass
class ReportRow:
    instance: str
    method: str
    eps: float | None
    delta: float | None
    estimate: float | Fraction
    truth: Fraction | None
    eps_o: float | None
    N: int
    tau_seconds: float
    seed: int

    def __post_init__(self):
        if (self.truth is None) != (self.eps_o is None):
            raise InvalidArgument("eps_o is present exactly when truth is")


COLUMNS = tuple(f.name for f in fields(ReportRow))


def replication_seed(master: int, index: int) -> int:
    """Integer seed for replication ``index``, derived from the master seed."""
    state = np.random.SeedSequence([master, index]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def signed_error(estimate, truth) -> float:
    """observed_error extended to zero values: 0 if both are zero, else +-inf."""
    estimate, truth = Fraction(estimate), Fraction(truth)
    if estimate > 0 and truth > 0:
        return float(observed_error(estimate, truth))
    if estimate == truth:
        return 0.0
    return math.inf if estimate > truth else -math.inf


# -- external counters --------------------------------------------------------

_MC_LINE = re.compile(r"^s mc (\d+)\s*$")


def invoke_counter(dimacs_path, command: str, timeout: float = DEFAULT_TIMEOUT) -> int:
    """Run ``command <dimacs_path>`` and read the last ``s mc <count>`` line."""
    if not Path(dimacs_path).exists():
        raise CounterError(f"CNF file {dimacs_path} does not exist")
    argv = shlex.split(command) + [str(dimacs_path)]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise CounterError(f"counter timed out after {timeout} s",
                           stdout=exc.stdout or "", stderr=exc.stderr or "") from None
    except OSError as exc:
        raise CounterError(f"cannot run counter {argv[0]!r}: {exc}") from None
    if proc.returncode != 0:
        raise CounterError(f"counter exited with status {proc.returncode}",
                           proc.stdout, proc.stderr, proc.returncode)
    count = None
    for line in proc.stdout.splitlines():
        m = _MC_LINE.match(line.strip())
        if m:
            count = int(m.group(1))
    if count is None:
        raise CounterError("counter output has no 's mc <count>' line",
                           proc.stdout, proc.stderr, proc.returncode)
    return count


def relnet_estimate(instance: NetworkInstance, counter_cmd: str | None = None,
                    timeout: float = DEFAULT_TIMEOUT,
                    count_limit: int = DEFAULT_COUNT_LIMIT) -> tuple[Fraction, int]:
    """Unreliability as (projected count) / 2^M; returns (estimate, M).

    Exact with the internal counter; with an external counter the result
    carries whatever guarantee that counter provides.
    """
    cnf = encode(unweight(instance))
    if counter_cmd is None:
        count = exact_projected_count(cnf, limit=count_limit)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "formula.cnf"
            path.write_text(emit_dimacs(cnf))
            count = invoke_counter(path, counter_cmd, timeout)
    return count_to_unreliability(count, cnf.M), cnf.M


# -- experiments --------------------------------------------------------------

def _estimate_once(config: ExperimentConfig, instance, truth, k, seed):
    params = est.PacParams(config.eps, config.delta) if config.method != "exact" else None
    method = config.method
    if method == "exact":
        start = time.perf_counter()
        result = exact_unreliability(instance)
        return result.unreliability, result.states_enumerated, time.perf_counter() - start
    if method == "relnet":
        start = time.perf_counter()
        value, _ = relnet_estimate(instance, config.counter_cmd, config.timeout,
                                   config.count_limit)
        return value, 1, time.perf_counter() - start

    main, aux, cheap = est.Entropy(seed).spawn(3)
    stream = est.cmc_stream(instance, main)
    if method == "gbas":
        e = est.gbas(stream, k, aux, params, max_samples=config.max_samples)
    elif method == "sra":
        e = est.sra(stream, params, max_samples=config.max_samples)
    elif method == "aa":
        e = est.aa(est.cmc_stream(instance, cheap), stream, params)
    else:
        n = config.mom_n
        if n is None:
            if truth is None or truth == 0:
                raise InvalidArgument("median-of-means needs mom_n when no exact truth is known")
            # crude Monte Carlo has relative variance (1 - u) / u
            n = est.mom_sample_size(float((1 - truth) / truth), config.eps)
        e = est.median_of_means(stream, n, config.delta, params)
    return e.value, e.samples_used, e.elapsed


def _replicate(config, ident, instance, truth, k, index) -> ReportRow:
    seed = replication_seed(config.seed, index)
    value, n, tau = _estimate_once(config, instance, truth, k, seed)
    eps_o = None if truth is None else signed_error(value, truth)
    exact = config.method == "exact"
    return ReportRow(ident, config.method, None if exact else config.eps,
                     None if exact else config.delta, value, truth, eps_o, n, tau, seed)


def run_experiment(config: ExperimentConfig) -> list[ReportRow]:
    ident, instance = config.load()
    truth = None
    if instance.m <= DEFAULT_EDGE_LIMIT:
        truth = exact_unreliability(instance).unreliability
    else:
        log.info("%s has %d edges; skipping exact truth", ident, instance.m)
    k = est.choose_k(est.PacParams(config.eps, config.delta)) if config.method == "gbas" else None

    indices = range(config.replications)
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_replicate, config, ident, instance, truth, k, i)
                       for i in indices]
            rows = [f.result() for f in futures]
    else:
        rows = [_replicate(config, ident, instance, truth, k, i) for i in indices]
    if config.out:
        write_csv(rows, config.out)
    return rows


# -- reports ------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_number(text: str):
    if text == "":
        return None
    if "/" in text:
        return Fraction(text)
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    return float(text)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def parse_csv(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise InvalidArgument(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        values = dict(zip(COLUMNS, rec))
        parsed = {c: _parse_number(values[c]) for c in COLUMNS if c not in ("instance", "method")}
        for c in ("eps", "delta", "eps_o", "tau_seconds"):
            if isinstance(parsed[c], int):
                parsed[c] = float(parsed[c])
        rows.append(ReportRow(values["instance"], values["method"], **parsed))
    return rows


def read_csv(path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        return parse_csv(fh.read())


def _json_value(value):
    if isinstance(value, Fraction):
        return _fmt(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def rows_to_json(rows) -> str:
    return json.dumps([{c: _json_value(getattr(r, c)) for c in COLUMNS} for r in rows],
                      indent=2)


def row_parameter(row: ReportRow, name: str):
    """A row column, or a ``name=value`` field embedded in the instance id."""
    if name in COLUMNS:
        return getattr(row, name)
    m = re.search(rf"(?:^|[:,]){re.escape(name)}=([^,]+)", row.instance)
    if not m:
        raise InvalidArgument(f"row for {row.instance!r} has no parameter {name!r}")
    return _parse_number(m.group(1))


PLOT_METRICS = ("eps_o", "tau_seconds")


def write_plots(rows, x: str, out_dir) -> list[Path]:
    """One SVG scatter per metric (eps_o, tau_seconds) against parameter ``x``."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in PLOT_METRICS:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        by_method: dict[str, list] = {}
        for r in rows:
            y = getattr(r, metric)
            if y is None or not math.isfinite(float(y)):
                continue
            by_method.setdefault(r.method, []).append((float(row_parameter(r, x)), float(y)))
        for method, pts in sorted(by_method.items()):
            xs, ys = zip(*pts)
            ax.scatter(xs, ys, s=12, label=method)
        ax.set_xlabel(x)
        ax.set_ylabel(metric)
        if by_method:
            ax.legend()
        fig.tight_layout()
        path = out_dir / f"{metric}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


def report(rows, fmt: str, out, x: str | None = None) -> list[Path]:
    if not rows:
        raise InvalidArgument("nothing to report")
    if fmt == "csv":
        write_csv(rows, out)
        return [Path(out)]
    if fmt == "json":
        Path(out).write_text(rows_to_json(rows) + "\n")
        return [Path(out)]
    if fmt == "svg-plot":
        if x is None:
            raise InvalidArgument("svg-plot needs a parameter to plot against (x)")
        return write_plots(rows, x, out)
    raise InvalidArgument(f"unknown report format {fmt!r}")
