import itertools

import numpy as np
import pytest

from hubbard_trotter.services.algebra import HoppingOp, Spin, map_sites, total, translate
from hubbard_trotter.services.lattice import (
    HEXAGON,
    LatticeError,
    build,
    build_hamiltonian,
    realize_on_torus,
    rotate_triangular,
)
from hubbard_trotter.services.norms import ModeIndex, to_matrix


@pytest.mark.parametrize("name,gamma", [("1d", 3), ("square", 3), ("triangular", 4)])
def test_decomposition_sizes(name, gamma):
    _, dec = build(name)
    assert dec.gamma == gamma
    assert [t.label for t in dec.terms] == [f"H{k + 1}" for k in range(gamma)]
    # the last term carries the interaction
    assert dec.v_terms == frozenset(range(gamma - 1))


def test_geometry_names_are_case_insensitive():
    geometry, _ = build(" Square ")
    assert geometry.kind == "square"


def test_unknown_geometry_is_rejected():
    with pytest.raises(LatticeError, match="unknown geometry"):
        build("kagome")


@pytest.mark.parametrize(
    "name,extents",
    [("1d", (2,)), ("1d", (5,)), ("square", (4,)), ("square", (4, 6, 2)), ("triangular", (4, 3))],
)
def test_bad_extents_are_rejected(name, extents):
    geometry, _ = build(name)
    with pytest.raises(LatticeError):
        geometry.check_extents(extents)


@pytest.mark.parametrize("name,extents", [("1d", (4,)), ("1d", (6,)), ("square", (4, 4)), ("triangular", (3, 3))])
def test_decomposition_covers_hamiltonian(name, extents):
    geometry, dec = build(name)
    parts = realize_on_torus(dec, extents, v=-1, u=2)
    assert total(parts) == build_hamiltonian(geometry, extents, v=-1, u=2)


@pytest.mark.parametrize("length", [4, 6])
def test_chain_hamiltonian_matrix(length):
    _, dec = build("1d")
    h = total(realize_on_torus(dec, (length,), v=-1, u=1))
    modes = ModeIndex(((i,), s) for i in range(length) for s in Spin)
    mat = to_matrix(h, modes, limit=2 * length).tocsr()
    assert abs(mat - mat.T).max() < 1e-12

    # a single spin-up particle sees the -2 cos k band
    up_mask = modes.spin_mask(Spin.UP)
    states = [k for k in range(2 ** len(modes)) if bin(k).count("1") == 1 and k & up_mask]
    block = mat[states][:, states].toarray()
    energies = np.sort(np.linalg.eigvalsh(block))
    expected = np.sort(-2 * np.cos(2 * np.pi * np.arange(length) / length))
    assert energies == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name,extents", [("1d", (4,)), ("1d", (6,)), ("square", (4, 4))])
def test_translates_of_a_term_are_disjoint(name, extents):
    geometry, dec = build(name)
    for term in dec.terms:
        pieces = [
            map_sites(translate(term.op.local, i), lambda s: geometry.wrap(s, extents))
            for i in geometry.cell_origins(extents)
        ]
        for a, b in itertools.combinations(pieces, 2):
            assert a.modes().isdisjoint(b.modes())


def test_torus_sites():
    geometry, _ = build("triangular")
    sites = geometry.torus_sites((3, 3))
    assert len(sites) == 9
    assert all(sum(s) == 0 for s in sites)
    assert len(geometry.cell_origins((3, 3))) == 3


def test_triangle_rotation_maps_hop_groups():
    _, dec = build("triangular")
    first = dec.terms[0].op.local
    second = dec.terms[1].op.local
    rotated = total(
        HoppingOp(rotate_triangular(u.i), rotate_triangular(u.j), u.spin).scale(w)
        for w, u in first.terms()
    )
    assert rotated == second
    assert rotate_triangular(HEXAGON[0], 3) == HEXAGON[0]


def test_hexagon_interaction_weights():
    _, dec = build("triangular")
    weights = sorted(float(w) for w, _ in dec.terms[3].op.local.terms())
    assert weights == pytest.approx([1 / 3] * 6 + [1.0])
