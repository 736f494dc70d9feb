"""Classical samplers over a QuboModel.

Three backends: an exhaustive ground-state scan (small models), multi-restart
single-bit-flip simulated annealing (the stand-in for annealer sampling, 1500
reads by default), and an adapter that ships the exported model to an external
sampler endpoint. All sample energies are recomputed locally against the
model, never trusted from elsewhere.
"""

from __future__ import annotations

import enum
import json
import math
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qubo
from .qubo import QuboModel

EXHAUSTIVE_CAP = 24
DEFAULT_NUM_READS = 1500
DEFAULT_SWEEPS = 1000


class Backend(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    SIMULATED_ANNEALING = "sa"
    QAOA = "qaoa"
    EXTERNAL = "external"


class Failure(enum.Enum):
    INVALID_TOUR = "invalid_tour"
    TIMEOUT = "timeout"
    COULD_NOT_EMBED = "could_not_embed"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class SampleEntry:
    bits: str
    count: int
    energy: float


@dataclass(frozen=True)
class SampleSet:
    """Multiset of sampled bitstrings; entries sorted by (energy, bits)."""

    backend: Backend
    num_reads: int
    entries: tuple[SampleEntry, ...]
    wall_time_s: float | None = None
    failure: Failure | None = None

    def total_count(self) -> int:
        return sum(e.count for e in self.entries)

    def best(self) -> SampleEntry | None:
        return self.entries[0] if self.entries else None

    def to_json_dict(self, include_timing: bool = True) -> dict:
        return {
            "backend": self.backend.value,
            "num_reads": self.num_reads,
            "wall_time_s": self.wall_time_s if include_timing else None,
            "failure": self.failure.value if self.failure else None,
            "entries": [
                {"bits": e.bits, "count": e.count, "energy": e.energy}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SampleSet":
        return cls(
            backend=Backend(data["backend"]),
            num_reads=int(data["num_reads"]),
            entries=tuple(
                SampleEntry(str(e["bits"]), int(e["count"]), float(e["energy"]))
                for e in data["entries"]
            ),
            wall_time_s=data.get("wall_time_s"),
            failure=Failure(data["failure"]) if data.get("failure") else None,
        )


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int
    beta_initial: float
    beta_final: float
    interpolation: str = "geometric"  # or "linear"

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not (0 < self.beta_initial < self.beta_final < math.inf):
            raise ValueError("need 0 < beta_initial < beta_final < inf")
        if self.interpolation not in ("geometric", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_final])
        if self.interpolation == "geometric":
            return np.geomspace(self.beta_initial, self.beta_final, self.sweeps)
        return np.linspace(self.beta_initial, self.beta_final, self.sweeps)


def _max_flip_delta(model: QuboModel) -> float:
    """Largest possible |energy change| of any single bit flip."""
    delta = np.zeros(model.num_vars)
    for v, c in model.linear.items():
        delta[v] += abs(c)
    for (u, v), c in model.quadratic.items():
        delta[u] += abs(c)
        delta[v] += abs(c)
    top = float(delta.max()) if model.num_vars else 0.0
    return top


def default_schedule(model: QuboModel, sweeps: int = DEFAULT_SWEEPS) -> AnnealSchedule:
    """Geometric schedule: worst uphill flip accepted w.p. ~0.5 at the start,
    ~1e-4 at the end."""
    d_max = _max_flip_delta(model)
    if d_max <= 0.0:
        d_max = 1.0
    return AnnealSchedule(
        sweeps=sweeps,
        beta_initial=math.log(2.0) / d_max,
        beta_final=math.log(1e4) / d_max,
        interpolation="geometric",
    )


def _entries_from_rows(model: QuboModel, rows: np.ndarray) -> tuple[SampleEntry, ...]:
    """Deduplicate sample rows and recompute their energies exactly."""
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    entries = []
    for row, count in zip(uniq, counts):
        bits = qubo.bits_to_str(row)
        entries.append(SampleEntry(bits, int(count), qubo.energy(model, bits)))
    entries.sort(key=lambda e: (e.energy, e.bits))
    return tuple(entries)


# --- exhaustive scan ---------------------------------------------------------


def exhaustive_ground_state(
    model: QuboModel, max_vars: int = EXHAUSTIVE_CAP
) -> tuple[str, float]:
    """Global minimum-energy bitstring; ties go to the lexicographically
    smallest string (bit 0 most significant)."""
    n = model.num_vars
    if n > max_vars:
        raise ValueError(f"{n} variables exceed the exhaustive cap {max_vars}")
    q, offset = model.to_dense()
    linear = np.diagonal(q).copy()
    np.fill_diagonal(q, 0.0)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)

    best_e = math.inf
    best_m = 0
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        ms = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint64)
        bits = ((ms[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies = offset + bits @ linear + np.einsum("bi,ij,bj->b", bits, q, bits)
        idx = int(np.argmin(energies))
        if energies[idx] < best_e:
            best_e = float(energies[idx])
            best_m = int(ms[idx])
    bits = [(best_m >> int(s)) & 1 for s in shifts]
    bitstring = qubo.bits_to_str(bits)
    return bitstring, qubo.energy(model, bitstring)


# --- simulated annealing -----------------------------------------------------


def sa_sample(
    model: QuboModel,
    num_reads: int = DEFAULT_NUM_READS,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
) -> SampleSet:
    """Independent Metropolis restarts, each from a random bitstring.

    All restarts are evolved as one array program; the result is fully
    determined by (model, num_reads, schedule, seed). Each read reports its
    final state after the last sweep.
    """
    if num_reads < 1:
        raise ValueError("num_reads must be >= 1")
    if schedule is None:
        schedule = default_schedule(model)
    n = model.num_vars
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    q, _ = model.to_dense()
    linear = np.diagonal(q).copy()
    np.fill_diagonal(q, 0.0)
    qsym = q + q.T

    bits = rng.integers(0, 2, size=(num_reads, n)).astype(np.float64)
    fields = bits @ qsym  # fields[r, v] = sum_u q_{uv} * b_u
    for beta in schedule.betas():
        # accept iff u < exp(-beta * delta), i.e. delta < -log(u) / beta
        thresholds = -np.log(rng.random((num_reads, n)) + 1e-300) / beta
        for v in range(n):
            sign = 1.0 - 2.0 * bits[:, v]
            delta = sign * (linear[v] + fields[:, v])
            accept = delta < thresholds[:, v]
            if not accept.any():
                continue
            coef = np.where(accept, sign, 0.0)
            fields += coef[:, None] * qsym[v][None, :]
            bits[:, v] = np.where(accept, 1.0 - bits[:, v], bits[:, v])

    entries = _entries_from_rows(model, bits.astype(np.uint8))
    return SampleSet(
        backend=Backend.SIMULATED_ANNEALING, num_reads=num_reads, entries=entries
    )


# --- external sampler adapter -------------------------------------------------


class ExternalSamplerError(RuntimeError):
    """The remote sampler returned something outside the agreed schema."""


@dataclass
class ExternalSamplerConfig:
    """Where to send the model: an HTTP endpoint or an in-process transport.

    ``transport`` takes the JSON-able request dict and returns the response
    dict; when absent, ``url`` is POSTed to with JSON over HTTP.
    """

    url: str | None = None
    transport: Callable[[dict], dict] | None = None
    num_reads: int = DEFAULT_NUM_READS
    timeout_s: float = 30.0


def _http_transport(url: str, timeout_s: float) -> Callable[[dict], dict]:
    def send(payload: dict) -> dict:
        body = json.dumps(payload).encode("utf-8")
        req = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(req, timeout=timeout_s) as resp:
            return json.loads(resp.read().decode("utf-8"))

    return send


_FAILURE_KEYWORDS = (
    ("embed", Failure.COULD_NOT_EMBED),
    ("timeout", Failure.TIMEOUT),
    ("invalid", Failure.INVALID_TOUR),
)


def _map_remote_failure(reason: str) -> Failure:
    lowered = reason.lower()
    for needle, failure in _FAILURE_KEYWORDS:
        if needle in lowered:
            return failure
    return Failure.NOT_APPLICABLE


def external_sampler_submit(
    model: QuboModel, config: ExternalSamplerConfig
) -> SampleSet:
    """Ship the exported model, ingest (bits, count) pairs, recompute energies.

    Remote failure strings map onto the failure taxonomy; transport errors
    count as a timeout; schema violations raise.
    """
    transport = config.transport
    if transport is None:
        if config.url is None:
            raise ValueError("external sampler needs a url or a transport")
        transport = _http_transport(config.url, config.timeout_s)
    payload = {"model": qubo.to_json_dict(model), "num_reads": config.num_reads}
    try:
        response = transport(payload)
    except (urllib.error.URLError, TimeoutError, ConnectionError, OSError):
        return SampleSet(
            backend=Backend.EXTERNAL,
            num_reads=config.num_reads,
            entries=(),
            failure=Failure.TIMEOUT,
        )

    if not isinstance(response, dict):
        raise ExternalSamplerError("response is not a JSON object")
    reason = response.get("failure")
    if reason:
        return SampleSet(
            backend=Backend.EXTERNAL,
            num_reads=config.num_reads,
            entries=(),
            failure=_map_remote_failure(str(reason)),
        )
    raw_entries = response.get("entries")
    if not isinstance(raw_entries, list):
        raise ExternalSamplerError("response lacks an entries list")
    entries = []
    total = 0
    for item in raw_entries:
        try:
            bits = str(item["bits"])
            count = int(item["count"])
        except (TypeError, KeyError, ValueError) as exc:
            raise ExternalSamplerError(f"bad entry {item!r}") from exc
        if len(bits) != model.num_vars or set(bits) - {"0", "1"}:
            raise ExternalSamplerError(
                f"bitstring length {len(bits)} != {model.num_vars} variables"
            )
        if count < 1:
            raise ExternalSamplerError("entry count must be positive")
        total += count
        entries.append(SampleEntry(bits, count, qubo.energy(model, bits)))
    entries.sort(key=lambda e: (e.energy, e.bits))
    return SampleSet(
        backend=Backend.EXTERNAL, num_reads=total, entries=tuple(entries)
    )
