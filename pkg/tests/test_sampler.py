from __future__ import annotations

import json
import threading
import urllib.error
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from gtspq.baseline import exact_solve
from gtspq.qubo import QuboModel, build_qubo, decode, energy
from gtspq.sampler import (
    AnnealSchedule,
    Backend,
    ExternalSamplerConfig,
    ExternalSamplerError,
    Failure,
    SampleSet,
    default_schedule,
    exhaustive_ground_state,
    external_sampler_submit,
    sa_sample,
)

import gen


def test_exhaustive_toy_ground_state(toy_instance):
    model = build_qubo(toy_instance)
    bits, e = exhaustive_ground_state(model)
    verdict = decode(model, toy_instance, bits)
    assert verdict.feasible
    assert e == pytest.approx(10.0)


def test_exhaustive_tie_breaks_lexicographically():
    model = QuboModel(n=3, k=1, linear={}, quadratic={}, offset=2.0, lam=1.0)
    bits, e = exhaustive_ground_state(model)
    assert bits == "000"
    assert e == 2.0


def test_exhaustive_cap():
    model = QuboModel(n=5, k=5, linear={}, quadratic={}, offset=0.0, lam=1.0)
    with pytest.raises(ValueError):
        exhaustive_ground_state(model)


def test_exhaustive_matches_exact_baseline():
    for seed in (1, 2, 3):
        inst = gen.make_random_instance(seed=seed, n=4, k=3)
        model = build_qubo(inst)
        bits, e = exhaustive_ground_state(model)
        verdict = decode(model, inst, bits)
        assert verdict.feasible
        assert e == pytest.approx(exact_solve(inst).cost, abs=1e-9)


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(sweeps=0, beta_initial=0.1, beta_final=1.0)
    with pytest.raises(ValueError):
        AnnealSchedule(sweeps=10, beta_initial=1.0, beta_final=0.1)
    with pytest.raises(ValueError):
        AnnealSchedule(sweeps=10, beta_initial=0.1, beta_final=1.0, interpolation="x")
    lin = AnnealSchedule(sweeps=3, beta_initial=1.0, beta_final=2.0, interpolation="linear")
    assert lin.betas().tolist() == [1.0, 1.5, 2.0]


def test_default_schedule_acceptance_targets():
    inst = gen.make_random_instance(seed=5, n=4, k=3)
    model = build_qubo(inst)
    sched = default_schedule(model)
    assert sched.sweeps == 1000
    # worst single flip accepted with probability ~0.5 initially, ~1e-4 finally
    deltas = np.zeros(model.num_vars)
    for v, c in model.linear.items():
        deltas[v] += abs(c)
    for (u, v), c in model.quadratic.items():
        deltas[u] += abs(c)
        deltas[v] += abs(c)
    d_max = deltas.max()
    assert np.exp(-sched.beta_initial * d_max) == pytest.approx(0.5, rel=1e-9)
    assert np.exp(-sched.beta_final * d_max) == pytest.approx(1e-4, rel=1e-9)


def test_sa_downhill_only_single_variable():
    model = QuboModel(n=1, k=1, linear={0: 5.0}, quadratic={}, offset=0.0, lam=1.0)
    result = sa_sample(model, num_reads=64, seed=0)
    assert len(result.entries) == 1
    assert result.entries[0].bits == "0"
    assert result.entries[0].count == 64
    assert result.backend is Backend.SIMULATED_ANNEALING


def test_sa_deterministic_for_fixed_seed():
    inst = gen.make_random_instance(seed=6, n=4, k=2)
    model = build_qubo(inst)
    a = sa_sample(model, num_reads=50, seed=123)
    b = sa_sample(model, num_reads=50, seed=123)
    assert a == b
    c = sa_sample(model, num_reads=50, seed=124)
    assert a != c


def test_sa_counts_sum_to_num_reads():
    inst = gen.make_random_instance(seed=7, n=3, k=2)
    model = build_qubo(inst)
    result = sa_sample(model, num_reads=200, seed=5)
    assert result.total_count() == 200
    assert result.failure is None


def test_sa_energy_honesty():
    inst = gen.make_random_instance(seed=8, n=4, k=3)
    model = build_qubo(inst)
    result = sa_sample(model, num_reads=100, seed=2)
    for entry in result.entries:
        assert entry.energy == pytest.approx(energy(model, entry.bits), abs=1e-9)


def test_sa_entries_sorted_by_energy_then_bits():
    inst = gen.make_random_instance(seed=9, n=4, k=3)
    model = build_qubo(inst)
    entries = sa_sample(model, num_reads=300, seed=4).entries
    keys = [(e.energy, e.bits) for e in entries]
    assert keys == sorted(keys)


def test_sa_best_read_hits_ground_state():
    inst = gen.make_random_instance(seed=10, n=5, k=3)  # 15 vars
    model = build_qubo(inst)
    _, gs = exhaustive_ground_state(model)
    result = sa_sample(model, num_reads=1500, seed=0)
    assert result.entries[0].energy == pytest.approx(gs, abs=1e-9)


def test_sa_more_sweeps_help_on_average():
    inst = gen.make_random_instance(seed=11, n=8, k=2)  # 16 vars
    model = build_qubo(inst)
    short, long = [], []
    for seed in range(30):
        short.append(
            sa_sample(model, 4, default_schedule(model, sweeps=20), seed).entries[0].energy
        )
        long.append(
            sa_sample(model, 4, default_schedule(model, sweeps=2000), seed).entries[0].energy
        )
    assert np.mean(long) <= np.mean(short)


# --- external sampler adapter --------------------------------------------------


def _toy_model(toy_instance):
    return build_qubo(toy_instance)


def test_external_echo_ground_state(toy_instance):
    model = _toy_model(toy_instance)
    gs_bits, gs_energy = exhaustive_ground_state(model)

    def transport(payload):
        assert payload["model"]["n_vars"] == model.num_vars
        return {"entries": [{"bits": gs_bits, "count": 3}]}

    result = external_sampler_submit(model, ExternalSamplerConfig(transport=transport))
    assert result.backend is Backend.EXTERNAL
    assert result.num_reads == 3
    assert result.entries == (type(result.entries[0])(gs_bits, 3, gs_energy),)


def test_external_never_trusts_remote_energy(toy_instance):
    model = _toy_model(toy_instance)

    def transport(payload):
        return {"entries": [{"bits": "1001", "count": 1, "energy": -999.0}]}

    result = external_sampler_submit(model, ExternalSamplerConfig(transport=transport))
    assert result.entries[0].energy == pytest.approx(energy(model, "1001"))


def test_external_embedding_failure(toy_instance):
    model = _toy_model(toy_instance)
    result = external_sampler_submit(
        model,
        ExternalSamplerConfig(transport=lambda payload: {"failure": "embedding failed"}),
    )
    assert result.failure is Failure.COULD_NOT_EMBED
    assert result.entries == ()


def test_external_wrong_length_is_schema_error(toy_instance):
    model = _toy_model(toy_instance)
    with pytest.raises(ExternalSamplerError):
        external_sampler_submit(
            model,
            ExternalSamplerConfig(
                transport=lambda payload: {"entries": [{"bits": "101", "count": 1}]}
            ),
        )


def test_external_transport_error_is_timeout(toy_instance):
    model = _toy_model(toy_instance)

    def broken(payload):
        raise urllib.error.URLError("down")

    result = external_sampler_submit(model, ExternalSamplerConfig(transport=broken))
    assert result.failure is Failure.TIMEOUT


def test_external_http_round_trip(toy_instance):
    model = _toy_model(toy_instance)
    gs_bits, _ = exhaustive_ground_state(model)

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            assert body["model"]["layout"] == {"n": 2, "k": 2}
            payload = json.dumps({"entries": [{"bits": gs_bits, "count": 2}]}).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{server.server_address[1]}/"
        result = external_sampler_submit(model, ExternalSamplerConfig(url=url))
        assert result.num_reads == 2
        assert result.entries[0].bits == gs_bits
    finally:
        server.shutdown()


def test_sampleset_json_round_trip(toy_instance):
    model = _toy_model(toy_instance)
    result = sa_sample(model, num_reads=20, seed=1)
    data = result.to_json_dict()
    again = SampleSet.from_json_dict(data)
    assert again == result
    timed = SampleSet.from_json_dict(
        SampleSet(Backend.QAOA, 5, result.entries, wall_time_s=1.25).to_json_dict(
            include_timing=False
        )
    )
    assert timed.wall_time_s is None
