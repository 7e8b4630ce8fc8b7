"""Shared fixtures: the seeded 25-model corpus used by property and
acceptance tests (d_s in {1,2,3}, decay dimension equal to the decay-matrix
rank, up to 2 Lindblad operators, every fifth member rank-deficient)."""

from types import SimpleNamespace

import pytest

from opendecay.model import (
    assemble_liouvillian,
    assemble_liouvillian_wwa,
    build_decay_operator,
    decompose_gamma,
    embed_operators,
    validate_spec,
)
from opendecay.randmodel import random_system

CORPUS_SIZE = 25


def corpus_params(i: int) -> dict:
    d_s = (i % 3) + 1
    return dict(
        seed=1000 + i,
        d_s=d_s,
        n_lindblad=i % 3,
        rank=max(1, d_s - 1) if i % 5 == 4 else d_s,
    )


def make_member(i: int) -> SimpleNamespace:
    spec, rho0 = random_system(**corpus_params(i))
    validate_spec(spec)
    dec = decompose_gamma(spec.decay_matrix)
    decay = build_decay_operator(dec, spec.d_f)
    model = embed_operators(spec, decay)
    return SimpleNamespace(
        index=i,
        spec=spec,
        rho0=rho0,
        dec=dec,
        decay=decay,
        model=model,
        liouv=assemble_liouvillian(model.hamiltonian, model.lindblad_ops, model.decay_op),
        liouv_wwa=assemble_liouvillian_wwa(spec),
    )


@pytest.fixture(scope="session")
def corpus():
    return [make_member(i) for i in range(CORPUS_SIZE)]
