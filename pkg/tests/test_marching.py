"""Grid extraction baseline: topology, accuracy, orientation, and the
exact sample budget."""

import numpy as np
import pytest

from frontmesh.fields import CountedField, Plane, QueryCounter, Sphere, Torus
from frontmesh.halfedge import HalfedgeMesh
from frontmesh.marching import CASE_TABLE, GridSpec, extract, matched_resolution

BBOX = np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])


def test_case_table_shape():
    assert len(CASE_TABLE) == 256
    assert CASE_TABLE[0] == ()
    assert CASE_TABLE[255] == ()
    # one inside corner yields one triangle, its complement the same count
    assert len(CASE_TABLE[1]) == 1
    assert len(CASE_TABLE[254]) == 1


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec([[0, 0, 0], [0, 1, 1]], 8)
    with pytest.raises(ValueError):
        GridSpec(BBOX, 0)
    spec = GridSpec(BBOX, 8)
    assert spec.n_samples == 9 ** 3
    ax, ay, az = spec.axes()
    assert ax[0] == -1.0 and ax[-1] == 1.0 and len(ax) == 9


def test_matched_resolution_arithmetic():
    # extent 2 over cells of r_d * sqrt(3)
    assert matched_resolution(BBOX, 0.02) == int(np.ceil(2 / (0.02 * np.sqrt(3))))
    assert matched_resolution(BBOX, 10.0) == 1
    tall = np.array([[0, 0, 0], [0.1, 0.1, 3.0]])
    assert matched_resolution(tall, 0.1) == int(np.ceil(3.0 / (0.1 * np.sqrt(3))))


def test_sphere_extraction_is_watertight_and_accurate():
    field = Sphere(radius=0.3)
    spec = GridSpec(BBOX, 64)
    pos, faces = extract(field, spec)
    assert len(faces) > 0
    mesh = HalfedgeMesh.from_indexed(pos, faces)
    assert mesh.validate() == []
    assert mesh.boundary_edges() == []
    assert mesh.n_vertices - mesh.n_edges + mesh.n_faces == 2
    # vertices sit within a cell diagonal of the true surface
    cell = 2.0 / 64
    d = np.abs(np.linalg.norm(pos, axis=1) - 0.3)
    assert np.max(d) < cell * np.sqrt(3)
    assert np.mean(d) < cell * 0.5


def test_torus_extraction_topology():
    field = Torus(major_radius=0.4, minor_radius=0.15)
    pos, faces = extract(field, GridSpec(BBOX, 48))
    mesh = HalfedgeMesh.from_indexed(pos, faces)
    assert mesh.validate() == []
    assert mesh.boundary_edges() == []
    assert mesh.n_vertices - mesh.n_edges + mesh.n_faces == 0  # genus one


def test_faces_oriented_toward_positive_field():
    field = Sphere(radius=0.3)
    pos, faces = extract(field, GridSpec(BBOX, 32))
    t = pos[faces]
    n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 1])
    centroids = t.mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", n, centroids) > 0)


def test_plane_extraction_exact():
    field = Plane(point=(0, 0, 0.125), normal=(0, 0, 1))
    pos, faces = extract(field, GridSpec(BBOX, 16))
    assert len(faces) > 0
    assert np.max(np.abs(pos[:, 2] - 0.125)) < 1e-9


def test_empty_when_no_crossing():
    field = Sphere(radius=0.3)
    spec = GridSpec(np.array([[2.0, 2.0, 2.0], [3.0, 3.0, 3.0]]), 8)
    pos, faces = extract(field, spec)
    assert pos.shape == (0, 3)
    assert faces.shape == (0, 3)


def test_exact_sample_budget():
    ctr = QueryCounter()
    field = CountedField(Sphere(radius=0.3), ctr)
    spec = GridSpec(BBOX, 24)
    extract(field, spec)
    assert ctr.sdf_evals == spec.n_samples == 25 ** 3
    assert ctr.gradient_evals == 0


def test_vertices_weld_exactly():
    # each crossing grid edge contributes one shared vertex: no duplicates
    field = Sphere(radius=0.3)
    pos, faces = extract(field, GridSpec(BBOX, 24))
    uniq = np.unique(pos, axis=0)
    assert uniq.shape == pos.shape
    assert np.all(faces >= 0) and np.all(faces < len(pos))
    assert len(np.unique(faces)) == len(pos)  # every vertex used
