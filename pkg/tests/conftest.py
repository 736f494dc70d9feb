from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from gtspq.instance import parse_gtsplib, serialize_gtsplib

import gen


@pytest.fixture
def toy_text() -> str:
    return (
        "NAME: toy\n"
        "TYPE: GTSP\n"
        "DIMENSION: 2\n"
        "GTSP_SETS: 2\n"
        "EDGE_WEIGHT_TYPE: EXPLICIT\n"
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
        "EDGE_WEIGHT_SECTION\n"
        "0 5\n"
        "5 0\n"
        "GTSP_SET_SECTION\n"
        "1 1 -1\n"
        "2 2 -1\n"
        "EOF\n"
    )


@pytest.fixture
def toy_instance(toy_text):
    return parse_gtsplib(toy_text)


@pytest.fixture
def write_instance(tmp_path):
    def _write(inst, stem=None) -> Path:
        path = tmp_path / f"{stem or inst.name}.gtsp"
        path.write_text(serialize_gtsplib(inst), encoding="utf-8")
        return path

    return _write


@pytest.fixture(scope="session")
def subsample_small_instances():
    return [gen.subsample_instance(name, n, k) for name, n, k in gen.SUBSAMPLE_SMALL]
