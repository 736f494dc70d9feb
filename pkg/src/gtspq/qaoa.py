"""Depth-p alternating-operator simulator on the one-hot-per-step subspace.

The state lives on the N^K tuples (i_0, ..., i_{K-1}), node i_c being the
single set bit of step c, so the step-wise one-hot constraint holds by
construction for every parameter choice. The mixer is an ordered product of
two-variable XX+YY rotations along a ring within each step partition; inside
the subspace each ring edge acts as the 2x2 block
[[cos 2b, -i sin 2b], [-i sin 2b, cos 2b]] on the pair of tuple coordinates it
couples. The phase layer multiplies by exp(-i*g*E) with E the full model
energy of the tuple's bitstring. Parameters are tuned by grid search over
(gamma, beta) with shot-sampled mean energy as the score.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import qubo
from .instance import GtspInstance
from .qubo import QuboModel, var_index
from .sampler import Backend, Failure, SampleEntry, SampleSet

MAX_SUBSPACE_DIM = 2_000_000


class StateTooLargeError(RuntimeError):
    """N^K amplitudes exceed the simulator's hard cap."""


@dataclass(frozen=True)
class PartitionLayout:
    """Step partitions of the N*K variables and their mixing rings."""

    n: int
    k: int
    partitions: tuple[tuple[int, ...], ...]
    ring_edges: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def dim(self) -> int:
        return self.n**self.k

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.k


def build_layout(n: int, k: int) -> PartitionLayout:
    partitions = []
    rings = []
    for t in range(k):
        qs = tuple(var_index(n, t, i) for i in range(n))
        partitions.append(qs)
        if n < 2:
            edges: tuple[tuple[int, int], ...] = ()
        elif n == 2:
            edges = ((qs[0], qs[1]),)
        else:
            edges = tuple((qs[i], qs[(i + 1) % n]) for i in range(n))
        rings.append(edges)
    return PartitionLayout(
        n=n, k=k, partitions=tuple(partitions), ring_edges=tuple(rings)
    )


@dataclass(frozen=True)
class SubspaceState:
    n: int
    k: int
    amps: np.ndarray  # complex128, length n**k, C-order over (i_0..i_{K-1})

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass(frozen=True)
class QaoaParams:
    gamma: float
    beta: float
    layers: int = 1


@dataclass(frozen=True)
class GridConfig:
    gamma_min: float = 0.05
    gamma_max: float = math.pi
    beta_min: float = 0.05
    beta_max: float = math.pi / 2
    gamma_points: int = 10
    beta_points: int = 10
    shots: int = 1500
    timeout_s: float = 300.0
    layers: int = 1
    score: str = "shots"  # or "exact": variance-free <diagonal>

    def gammas(self) -> np.ndarray:
        return np.linspace(self.gamma_min, self.gamma_max, self.gamma_points)

    def betas(self) -> np.ndarray:
        return np.linspace(self.beta_min, self.beta_max, self.beta_points)


@dataclass(frozen=True)
class CellSummary:
    gamma: float
    beta: float
    mean_energy: float
    feasible_shot_fraction: float | None
    best_shot_energy: float


@dataclass(frozen=True)
class GridResult:
    """Argmin cell (params + its samples), per-cell summaries, and the pooled
    multiset of every shot drawn during the search.

    ``search_samples`` is what downstream reporting consumes: the best shot
    observed anywhere during parameter optimization, with feasibility rates
    averaged over the whole search rather than one concentrated cell.
    """

    best_params: QaoaParams | None
    best_samples: SampleSet
    cells: tuple[CellSummary, ...]
    search_samples: SampleSet


def _check_dim(layout: PartitionLayout) -> None:
    if layout.dim > MAX_SUBSPACE_DIM:
        raise StateTooLargeError(
            f"subspace dimension {layout.n}^{layout.k} exceeds {MAX_SUBSPACE_DIM}"
        )


def initial_state(layout: PartitionLayout, seed: int) -> SubspaceState:
    """A single uniformly random one-hot basis state (one node per step)."""
    _check_dim(layout)
    rng = np.random.default_rng(seed)
    tup = tuple(int(x) for x in rng.integers(0, layout.n, size=layout.k))
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[np.ravel_multi_index(tup, layout.shape)] = 1.0
    return SubspaceState(n=layout.n, k=layout.k, amps=amps)


def cost_diagonal(model: QuboModel, layout: PartitionLayout) -> np.ndarray:
    """Model energy of every subspace tuple's bitstring, as a flat vector.

    Same-step quadratic terms never fire on one-hot tuples, so only linear
    terms and cross-step couplings contribute on top of the offset.
    """
    if (model.n, model.k) != (layout.n, layout.k):
        raise ValueError("model layout does not match the partition layout")
    _check_dim(layout)
    n, k = layout.n, layout.k
    diag = np.full(layout.shape, model.offset, dtype=np.float64)
    lin = np.zeros((k, n))
    for v, c in model.linear.items():
        lin[v // n, v % n] += c
    for c in range(k):
        shape = [1] * k
        shape[c] = n
        diag += lin[c].reshape(shape)
    cross: dict[tuple[int, int], np.ndarray] = {}
    for (u, v), c in model.quadratic.items():
        cu, iu = u // n, u % n
        cv, iv = v // n, v % n
        if cu == cv:
            continue
        mat = cross.setdefault((cu, cv), np.zeros((n, n)))
        mat[iu, iv] += c
    for (cu, cv), mat in cross.items():
        shape = [1] * k
        shape[cu] = n
        shape[cv] = n
        # axes must appear in tuple order when reshaping the n x n block
        if cu < cv:
            diag += mat.reshape(shape)
        else:
            diag += mat.T.reshape(shape)
    return diag.reshape(-1)


def apply_cost_phase(
    state: SubspaceState, diagonal: np.ndarray, gamma: float
) -> SubspaceState:
    amps = state.amps * np.exp(-1j * gamma * diagonal)
    return SubspaceState(n=state.n, k=state.k, amps=amps)


def apply_xy_ring_mixer(
    state: SubspaceState, layout: PartitionLayout, beta: float
) -> SubspaceState:
    """Ordered product of ring-edge rotations, partitions then edges ascending."""
    n, k = layout.n, layout.k
    arr = state.amps.copy().reshape(layout.shape)
    c2 = math.cos(2.0 * beta)
    s2 = math.sin(2.0 * beta)
    for t, edges in enumerate(layout.ring_edges):
        for u, v in edges:
            a = u - t * n
            b = v - t * n
            idx_a = [slice(None)] * k
            idx_b = [slice(None)] * k
            idx_a[t] = a
            idx_b[t] = b
            amp_a = arr[tuple(idx_a)].copy()
            amp_b = arr[tuple(idx_b)]
            arr[tuple(idx_a)] = c2 * amp_a - 1j * s2 * amp_b
            arr[tuple(idx_b)] = -1j * s2 * amp_a + c2 * amp_b
    return SubspaceState(n=n, k=k, amps=arr.reshape(-1))


def run_qaoa(
    model: QuboModel,
    layout: PartitionLayout,
    params: QaoaParams,
    seed: int,
    diagonal: np.ndarray | None = None,
) -> SubspaceState:
    """initial basis state, then (phase, mixer) x layers."""
    if diagonal is None:
        diagonal = cost_diagonal(model, layout)
    state = initial_state(layout, seed)
    for _ in range(params.layers):
        state = apply_cost_phase(state, diagonal, params.gamma)
        state = apply_xy_ring_mixer(state, layout, params.beta)
    return state


def sample_shots(
    state: SubspaceState, model: QuboModel, shots: int, seed: int
) -> SampleSet:
    """i.i.d. measurement draws; tuples rendered as full N*K bitstrings."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(probs), size=shots, p=probs)
    uniq, counts = np.unique(draws, return_counts=True)
    n, k = state.n, state.k
    entries = []
    for flat, count in zip(uniq, counts):
        tup = np.unravel_index(int(flat), (n,) * k)
        bits = np.zeros(n * k, dtype=np.uint8)
        for c, node in enumerate(tup):
            bits[var_index(n, c, int(node))] = 1
        bit_str = qubo.bits_to_str(bits)
        entries.append(SampleEntry(bit_str, int(count), qubo.energy(model, bit_str)))
    entries.sort(key=lambda e: (e.energy, e.bits))
    return SampleSet(backend=Backend.QAOA, num_reads=shots, entries=tuple(entries))


def grid_search(
    model: QuboModel,
    layout: PartitionLayout,
    grid: GridConfig,
    seed: int,
    inst: GtspInstance | None = None,
) -> GridResult:
    """Evaluate every (gamma, beta) cell; argmin of the cell score wins.

    Cells are scored by shot-estimated mean energy (or exact expectation when
    configured); ties go to the smaller gamma, then the smaller beta. The
    timeout covers the whole call: on expiry the best completed cell is
    returned, with failure=timeout only if nothing completed. Cell c derives
    its seed as seed + c, so the search is reproducible.
    """
    diagonal = cost_diagonal(model, layout)
    started = time.monotonic()
    cells: list[CellSummary] = []
    best_score = math.inf
    best_params: QaoaParams | None = None
    best_samples: SampleSet | None = None
    pooled: dict[str, tuple[int, float]] = {}
    pooled_shots = 0
    cell_index = 0
    for gamma in grid.gammas():
        for beta in grid.betas():
            if time.monotonic() - started > grid.timeout_s:
                break
            params = QaoaParams(
                gamma=float(gamma), beta=float(beta), layers=grid.layers
            )
            cell_seed = seed + cell_index
            state = run_qaoa(model, layout, params, cell_seed, diagonal=diagonal)
            samples = sample_shots(state, model, grid.shots, cell_seed)
            for e in samples.entries:
                count, _ = pooled.get(e.bits, (0, 0.0))
                pooled[e.bits] = (count + e.count, e.energy)
            pooled_shots += grid.shots
            if grid.score == "exact":
                score = float(np.real(np.sum(state.probabilities() * diagonal)))
            else:
                score = sum(e.energy * e.count for e in samples.entries) / grid.shots
            feasible = None
            if inst is not None:
                good = sum(
                    e.count
                    for e in samples.entries
                    if qubo.decode(model, inst, e.bits).feasible
                )
                feasible = good / grid.shots
            cells.append(
                CellSummary(
                    gamma=float(gamma),
                    beta=float(beta),
                    mean_energy=score,
                    feasible_shot_fraction=feasible,
                    best_shot_energy=samples.entries[0].energy,
                )
            )
            if score < best_score:
                best_score = score
                best_params = params
                best_samples = samples
            cell_index += 1
        else:
            continue
        break

    if best_samples is None:
        empty = SampleSet(
            backend=Backend.QAOA,
            num_reads=0,
            entries=(),
            failure=Failure.TIMEOUT,
        )
        return GridResult(
            best_params=None, best_samples=empty, cells=(), search_samples=empty
        )
    search_entries = tuple(
        sorted(
            (SampleEntry(bits, count, e) for bits, (count, e) in pooled.items()),
            key=lambda entry: (entry.energy, entry.bits),
        )
    )
    search_samples = SampleSet(
        backend=Backend.QAOA, num_reads=pooled_shots, entries=search_entries
    )
    return GridResult(
        best_params=best_params,
        best_samples=best_samples,
        cells=tuple(cells),
        search_samples=search_samples,
    )


def grid_summary_csv(result: GridResult) -> str:
    """Per-cell CSV: gamma, beta, mean_energy, feasible_shot_fraction,
    best_shot_energy."""
    lines = ["gamma,beta,mean_energy,feasible_shot_fraction,best_shot_energy"]
    for cell in result.cells:
        frac = "" if cell.feasible_shot_fraction is None else repr(cell.feasible_shot_fraction)
        lines.append(
            f"{cell.gamma!r},{cell.beta!r},{cell.mean_energy!r},{frac},"
            f"{cell.best_shot_energy!r}"
        )
    return "\n".join(lines) + "\n"
