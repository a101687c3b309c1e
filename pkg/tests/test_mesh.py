import json

import numpy as np
import pytest
import sympy

from ddforms.mesh import (MeshError, Simplex, betti_numbers, boundary_matrix,
                          build_complex, check_local_patch_condition,
                          generate_mesh, integer_rank, load_mesh_file,
                          orientation_sign, patch_pair, save_mesh_file,
                          skeleton_pair)


def test_simplex_faces_and_dim():
    s = Simplex((0, 2, 5))
    assert s.dim == 2
    assert s.faces() == [(2, 5), (0, 5), (0, 2)]
    with pytest.raises(MeshError):
        Simplex((2, 0, 5))


def test_orientation_sign_alternates():
    cell = Simplex((0, 1, 2))
    assert orientation_sign(Simplex((1, 2)), cell) == 1
    assert orientation_sign(Simplex((0, 2)), cell) == -1
    assert orientation_sign(Simplex((0, 1)), cell) == 1


def test_boundary_of_boundary_vanishes():
    pair = generate_mesh("annulus", 1)
    for m in range(2, pair.top_dim + 1):
        b1 = np.array(boundary_matrix(pair, m))
        b2 = np.array(boundary_matrix(pair, m - 1))
        assert not np.any(b2 @ b1)


def test_integer_rank_matches_sympy():
    rng = np.random.default_rng(7)
    for _ in range(20):
        mat = rng.integers(-3, 4, size=rng.integers(1, 7, size=2))
        assert integer_rank(mat) == sympy.Matrix(mat.tolist()).rank()


def test_betti_ball_like():
    for name in ("interval", "triangle", "tetrahedron", "square_grid",
                 "cube_tet"):
        pair = generate_mesh(name)
        b = betti_numbers(pair)
        assert b[0] == 1 and not any(b[1:])


def test_betti_sphere():
    assert betti_numbers(generate_mesh("sphere_boundary", 1)) == [1, 1]
    assert betti_numbers(generate_mesh("sphere_boundary", 2)) == [1, 0, 1]
    assert betti_numbers(generate_mesh("sphere_boundary", 3)) == [1, 0, 0, 1]


def test_betti_relative_boundary():
    for name in ("triangle", "tetrahedron", "square_grid"):
        pair = generate_mesh(name, 1, "full")
        b = betti_numbers(pair)
        assert b[-1] == 1 and not any(b[:-1])


def test_betti_relative_half_boundary():
    for name in ("triangle", "square_grid", "tetrahedron"):
        b = betti_numbers(generate_mesh(name, 1, "half"))
        assert not any(b)


def test_betti_annulus_and_ring(catalog):
    assert betti_numbers(catalog("annulus")) == [1, 1, 0]
    assert betti_numbers(catalog("annulus", 1, "full")) == [0, 1, 1]
    assert betti_numbers(catalog("solid_ring")) == [1, 1, 0, 0]
    assert betti_numbers(catalog("solid_ring", 1, "full")) == [0, 0, 1, 1]


def test_marked_set_closure_enforced():
    cells = [[0, 1, 2]]
    coords = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    pair = build_complex(cells, coords, marked=[[0, 1]])
    assert pair.is_marked((0,)) and pair.is_marked((1,))
    assert not pair.is_marked((2,))


def test_stratum_excludes_marked(catalog):
    pair = catalog("square_grid", 1, "full")
    boundary = {f.vertices for f in pair.boundary_facets()}
    for s in pair.stratum(1):
        assert s.vertices not in boundary


def test_patch_pair_interior_vertex():
    pair = generate_mesh("square_grid", 2)
    # vertex contained in every adjacent triangle; its patch is a disk
    counts = {}
    for c in pair.simplices(2):
        for v in c.vertices:
            counts[v] = counts.get(v, 0) + 1
    interior = max(counts, key=counts.get)
    patch = patch_pair(pair, pair.simplex((interior,)))
    b = betti_numbers(patch)
    assert b[:2] == [0, 0] and b[2] == 1


def test_patch_condition_catalog(catalog):
    for name in ("square_grid", "annulus", "cube_tet"):
        rep = check_local_patch_condition(catalog(name))
        assert rep["passed"] and not rep["failures"]


def test_patch_condition_pinched_fails():
    cells = [[0, 1, 2], [2, 3, 4]]
    coords = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 1.0), (2.0, 2.0)]
    rep = check_local_patch_condition(build_complex(cells, coords))
    assert not rep["passed"]
    assert (2,) in rep["failures"]


def test_skeleton_pair(catalog):
    pair = catalog("solid_ring")
    skel = skeleton_pair(pair, 2)
    assert skel.top_dim == 2
    assert len(skel.simplices(2)) == len(pair.simplices(2))
    assert not skel.simplices(3)


def test_skeleton_pair_drops_marked():
    pair = generate_mesh("square_grid", 1, "full")
    skel = skeleton_pair(pair, 1)
    assert len(skel.simplices(1)) == len(pair.stratum(1))


def test_mesh_file_roundtrip(tmp_path, catalog):
    pair = generate_mesh("annulus", 1, "full")
    path = tmp_path / "mesh.json"
    save_mesh_file(pair, path)
    back = load_mesh_file(path)
    assert back.top_dim == pair.top_dim
    assert back.marked == pair.marked
    assert betti_numbers(back) == betti_numbers(pair)


def test_mesh_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    with pytest.raises(MeshError):
        load_mesh_file(bad)
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"vertices": [], "cells": []}))
    with pytest.raises(MeshError):
        load_mesh_file(missing)
