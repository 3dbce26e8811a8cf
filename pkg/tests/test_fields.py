import numpy as np
import pytest

from retarget import (
    CoverageError,
    DeformationField,
    MeshStage,
    SeamRecord,
    load_field,
    map_points,
    parse_field,
    removed_source_pixels,
    save_field,
    serialize_field,
)
from retarget.fields import MESH, SEAM_INSERTION, SEAM_REMOVAL


def vfield(*seams, kind=SEAM_REMOVAL):
    return DeformationField(kind, seams=tuple(SeamRecord("v", s) for s in seams))


def test_kind_validation():
    with pytest.raises(ValueError):
        DeformationField("bogus")
    with pytest.raises(ValueError):
        DeformationField(SEAM_REMOVAL, meshes=(MeshStage(2, np.zeros((2, 2, 2)), np.zeros((2, 2, 2))),))
    with pytest.raises(ValueError):
        DeformationField(MESH, seams=(SeamRecord("v", [0]),))


def test_removal_replay_hand_case():
    field = vfield([0, 1, 2])
    pts = np.array(
        [[0, 0], [1, 0], [3, 0], [2, 1], [1, 1], [3, 3], [0, 3]], dtype=float
    )
    mapped, size = map_points(field, pts, (3, 3))
    assert size == (2, 3)
    assert mapped.tolist() == [
        [0, 0], [0, 0], [2, 0], [1, 1], [1, 1], [2, 3], [0, 3],
    ]


def test_insertion_replay_hand_case():
    field = vfield([1, 1, 1], kind=SEAM_INSERTION)
    pts = np.array([[0, 0], [1, 0], [2, 0], [3, 2]], dtype=float)
    mapped, size = map_points(field, pts, (3, 3))
    assert size == (4, 3)
    # duplicate sits after pixel 1: corners at or right of 2 shift right
    assert mapped.tolist() == [[0, 0], [1, 0], [3, 0], [4, 2]]


def test_horizontal_removal_replay():
    field = DeformationField(SEAM_REMOVAL, seams=(SeamRecord("h", [0, 1, 2]),))
    pts = np.array([[0, 0], [0, 1], [1, 2], [0, 3], [2, 3]], dtype=float)
    mapped, size = map_points(field, pts, (3, 3))
    assert size == (3, 2)
    assert mapped.tolist() == [[0, 0], [0, 0], [1, 1], [0, 2], [2, 2]]


def test_identity_field_maps_points_unchanged():
    field = DeformationField(SEAM_REMOVAL)
    pts = np.array([[0.0, 0.0], [2.5, 1.5]])
    mapped, size = map_points(field, pts, (4, 4))
    assert size == (4, 4)
    assert np.array_equal(mapped, pts)


def test_replay_rejects_wrong_length():
    field = vfield([0, 1])
    with pytest.raises(CoverageError):
        map_points(field, np.zeros((1, 2)), (3, 3))


def test_replay_rejects_out_of_range_position():
    field = vfield([0, 1, 5])
    with pytest.raises(CoverageError):
        map_points(field, np.zeros((1, 2)), (3, 3))


def test_removal_at_last_column_allowed():
    field = vfield([2, 2, 2])
    mapped, size = map_points(field, np.array([[3.0, 0.0]]), (3, 3))
    assert size == (2, 3)
    assert mapped.tolist() == [[2, 0]]


def test_removed_source_pixels_single_seam():
    field = vfield([0, 1, 2])
    xs, ys = removed_source_pixels(field, (3, 3))
    assert sorted(zip(xs.tolist(), ys.tolist())) == [(0, 0), (1, 1), (2, 2)]


def test_removed_source_pixels_two_seams_account_for_shift():
    # second seam's positions are in the already-reduced frame
    field = vfield([0, 0, 0], [0, 0, 0])
    xs, ys = removed_source_pixels(field, (3, 3))
    got = sorted(zip(xs.tolist(), ys.tolist()))
    assert got == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


def test_removed_source_pixels_kind_guard():
    field = DeformationField(SEAM_INSERTION, seams=(SeamRecord("v", [0]),))
    with pytest.raises(Exception):
        removed_source_pixels(field, (2, 1))


def test_seam_serialization_round_trip():
    field = DeformationField(
        SEAM_REMOVAL,
        seams=(SeamRecord("v", [0, 1, 2]), SeamRecord("h", [1, 0])),
    )
    text = serialize_field(field)
    lines = text.strip().split("\n")
    assert lines[0] == SEAM_REMOVAL
    assert lines[1] == "v 0 1 2"
    assert lines[2] == "h 1 0"
    back = parse_field(text)
    assert back.kind == field.kind
    assert [(s.axis, s.positions.tolist()) for s in back.seams] == [
        ("v", [0, 1, 2]),
        ("h", [1, 0]),
    ]


def test_mesh_serialization_round_trip(tmp_path):
    sv = np.array([[[0, 0], [2, 0]], [[0, 2], [2, 2]]], dtype=float)
    tv = sv * [0.5, 1.0]
    field = DeformationField(MESH, meshes=(MeshStage(2, sv, tv),))
    p = tmp_path / "f.field"
    save_field(field, p)
    back = load_field(p)
    assert back.kind == MESH
    assert np.allclose(back.meshes[0].source_vertices, sv)
    assert np.allclose(back.meshes[0].target_vertices, tv)
    assert back.meshes[0].cell_size == 2


def test_mesh_replay_bilinear_center():
    sv = np.array([[[0, 0], [4, 0]], [[0, 4], [4, 4]]], dtype=float)
    tv = np.array([[[0, 0], [2, 0]], [[0, 4], [2, 4]]], dtype=float)
    field = DeformationField(MESH, meshes=(MeshStage(4, sv, tv),))
    mapped, size = map_points(field, np.array([[2.0, 2.0], [4.0, 4.0]]), (4, 4))
    assert size == (2, 4)
    assert np.allclose(mapped, [[1.0, 2.0], [2.0, 4.0]])


def test_mesh_replay_size_guard():
    sv = np.array([[[0, 0], [4, 0]], [[0, 4], [4, 4]]], dtype=float)
    field = DeformationField(MESH, meshes=(MeshStage(4, sv, sv),))
    with pytest.raises(CoverageError):
        map_points(field, np.zeros((1, 2)), (5, 4))


def test_parse_rejects_garbage():
    with pytest.raises(Exception):
        parse_field("not-a-kind\n")
