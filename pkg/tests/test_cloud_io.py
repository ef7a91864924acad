import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from promptvox.cloud_io import (
    CloudFormat,
    NormalizationTransform,
    PointCloud,
    SourceKind,
    load_cloud,
    load_point_mask,
    normalize,
    parse_kitti_bin,
    parse_ply,
    parse_xyzrgb_text,
    save_cloud,
    save_point_mask,
)
from promptvox.errors import (
    DegenerateCloud,
    EmptyCloud,
    LengthMismatch,
    MalformedRecord,
    UnreadableFile,
    UnsupportedPlyFeature,
)


class TestXyzrgbText:
    def test_255_scaled_line(self):
        cloud = parse_xyzrgb_text(b"0.1 0.2 0.3 255 0 0\n")
        assert np.allclose(cloud.positions[0], [0.1, 0.2, 0.3])
        assert np.allclose(cloud.colors[0], [1.0, 0.0, 0.0])

    def test_unit_floats_kept(self):
        cloud = parse_xyzrgb_text(b"0 0 0 0.25 0.5 1.0\n")
        assert np.allclose(cloud.colors[0], [0.25, 0.5, 1.0])

    def test_scale_detection_is_per_file(self):
        # one value > 1 flips the whole file to 255-scaling
        cloud = parse_xyzrgb_text(b"0 0 0 1 1 1\n1 1 1 128 0 0\n")
        assert np.allclose(cloud.colors[0], [1 / 255] * 3)
        assert np.allclose(cloud.colors[1], [128 / 255, 0, 0])

    def test_three_column_gray(self):
        cloud = parse_xyzrgb_text(b"1 2 3\n4 5 6\n")
        assert np.allclose(cloud.colors, 0.5)

    def test_empty_file(self):
        with pytest.raises(EmptyCloud):
            parse_xyzrgb_text(b"")

    def test_malformed_line_reports_location(self):
        with pytest.raises(MalformedRecord) as err:
            parse_xyzrgb_text(b"0 0 0 1 1 1\n0 0 zero 1 1 1\n")
        assert err.value.location == 2

    def test_mixed_arity_rejected(self):
        with pytest.raises(MalformedRecord):
            parse_xyzrgb_text(b"0 0 0 1 1 1\n0 0 0\n")

    def test_color_above_255_rejected(self):
        with pytest.raises(MalformedRecord):
            parse_xyzrgb_text(b"0 0 0 300 0 0\n")

    def test_blank_lines_skipped(self):
        cloud = parse_xyzrgb_text(b"\n0 0 0 1 1 1\n\n")
        assert cloud.n == 1


class TestKittiBin:
    def test_parses_exact_floats(self):
        record = np.array([[1.0, 2.0, 0.5, 0.5]], dtype="<f4")
        cloud = parse_kitti_bin(record.tobytes())
        assert cloud.source_kind is SourceKind.LIDAR
        assert np.array_equal(cloud.positions[0], [1.0, 2.0, 0.5])
        assert np.array_equal(cloud.colors[0], [0.5, 0.5, 0.5])

    def test_record_count_is_size_over_16(self):
        records = np.arange(20, dtype="<f4").reshape(5, 4)
        records[:, 3] = 0.25
        cloud = parse_kitti_bin(records.tobytes())
        assert cloud.n == 5

    def test_remainder_is_error(self):
        with pytest.raises(MalformedRecord) as err:
            parse_kitti_bin(b"\x00" * 18)
        assert err.value.location == 16

    def test_empty_is_empty_cloud(self):
        with pytest.raises(EmptyCloud):
            parse_kitti_bin(b"")

    def test_intensity_clamped(self):
        record = np.array([[0.0, 0.0, 0.0, 1.5]], dtype="<f4")
        cloud = parse_kitti_bin(record.tobytes())
        assert np.array_equal(cloud.colors[0], [1.0, 1.0, 1.0])


def _ascii_ply(vertices, color_type="uchar"):
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"property {color_type} red",
        f"property {color_type} green",
        f"property {color_type} blue",
        "end_header",
    ]
    for v in vertices:
        lines.append(" ".join(str(x) for x in v))
    return ("\n".join(lines) + "\n").encode()


class TestPly:
    def test_ascii_uchar_colors(self):
        cloud = parse_ply(_ascii_ply([(0.5, 0.25, 0.125, 255, 0, 128)]))
        assert np.allclose(cloud.positions[0], [0.5, 0.25, 0.125])
        assert np.allclose(cloud.colors[0], [1.0, 0.0, 128 / 255])

    def test_ascii_float_colors(self):
        cloud = parse_ply(_ascii_ply([(0, 0, 0, 0.5, 0.5, 1.0)], color_type="float"))
        assert np.allclose(cloud.colors[0], [0.5, 0.5, 1.0])

    def test_binary_little_endian(self):
        header = (
            b"ply\nformat binary_little_endian 1.0\n"
            b"element vertex 2\n"
            b"property float x\nproperty float y\nproperty float z\n"
            b"property uchar red\nproperty uchar green\nproperty uchar blue\n"
            b"end_header\n"
        )
        body = b""
        for x, y, z, r, g, b in [(0.5, 0.0, 1.0, 255, 0, 0), (0.25, 0.5, 0.75, 0, 255, 0)]:
            body += np.array([x, y, z], dtype="<f4").tobytes()
            body += bytes([r, g, b])
        cloud = parse_ply(header + body)
        assert cloud.n == 2
        assert np.allclose(cloud.positions[1], [0.25, 0.5, 0.75])
        assert np.allclose(cloud.colors[0], [1.0, 0.0, 0.0])

    def test_colorless_gets_gray(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 1\n"
            b"property float x\nproperty float y\nproperty float z\nend_header\n"
            b"1 2 3\n"
        )
        assert np.allclose(parse_ply(data).colors, 0.5)

    def test_big_endian_unsupported(self):
        data = b"ply\nformat binary_big_endian 1.0\nelement vertex 1\nend_header\n"
        with pytest.raises(UnsupportedPlyFeature):
            parse_ply(data)

    def test_integer_positions_unsupported(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 1\n"
            b"property int x\nproperty float y\nproperty float z\nend_header\n1 2 3\n"
        )
        with pytest.raises(UnsupportedPlyFeature):
            parse_ply(data)

    def test_list_property_unsupported(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 1\n"
            b"property list uchar int vertex_indices\nend_header\n"
        )
        with pytest.raises(UnsupportedPlyFeature):
            parse_ply(data)

    def test_zero_vertices_is_empty(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 0\n"
            b"property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        with pytest.raises(EmptyCloud):
            parse_ply(data)

    def test_truncated_binary_reports_offset(self):
        header = (
            b"ply\nformat binary_little_endian 1.0\nelement vertex 3\n"
            b"property float x\nproperty float y\nproperty float z\nend_header\n"
        )
        with pytest.raises(MalformedRecord):
            parse_ply(header + b"\x00" * 10)

    def test_extra_scalar_properties_skipped(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 1\n"
            b"property float x\nproperty float y\nproperty float z\n"
            b"property float confidence\nend_header\n"
            b"0.5 0.5 0.5 0.99\n"
        )
        cloud = parse_ply(data)
        assert np.allclose(cloud.positions[0], 0.5)


class TestLoadSaveRoundTrip:
    def test_auto_format_by_extension(self, tmp_path):
        path = tmp_path / "cloud.txt"
        path.write_text("0 0 0 1 0 0\n1 1 1 0 1 0\n")
        cloud = load_cloud(path)
        assert cloud.n == 2

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "cloud.weird"
        path.write_text("0 0 0 1 1 1\n")
        with pytest.raises(UnreadableFile):
            load_cloud(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UnreadableFile):
            load_cloud(tmp_path / "nope.txt")

    def test_text_round_trip(self, tmp_path, make_cloud):
        cloud = make_cloud(64)
        path = tmp_path / "round.txt"
        save_cloud(cloud, path)
        loaded = load_cloud(path)
        assert np.allclose(loaded.positions, cloud.positions, atol=1e-6)
        assert np.array_equal(loaded.colors, cloud.colors)

    def test_kitti_round_trip_bit_exact(self, tmp_path, rng):
        positions = rng.random((40, 3)).astype(np.float32).astype(np.float64)
        intensity = rng.random(40).astype(np.float32).astype(np.float64)
        cloud = PointCloud(positions, np.repeat(intensity[:, None], 3, axis=1), SourceKind.LIDAR)
        path = tmp_path / "round.bin"
        save_cloud(cloud, path)
        loaded = load_cloud(path)
        assert np.array_equal(loaded.positions, cloud.positions)
        assert np.array_equal(loaded.colors, cloud.colors)

    def test_ply_round_trip(self, tmp_path, rng):
        positions = rng.random((16, 3)).astype(np.float32).astype(np.float64)
        colors = rng.integers(0, 256, (16, 3)).astype(np.float32).astype(np.float64) / 255
        colors = colors.astype(np.float32).astype(np.float64)
        cloud = PointCloud(positions, colors)
        path = tmp_path / "round.ply"
        save_cloud(cloud, path)
        loaded = load_cloud(path)
        assert np.array_equal(loaded.positions, cloud.positions)
        assert np.allclose(loaded.colors, cloud.colors, atol=1e-7)


class TestNormalize:
    def test_longest_axis_rule(self):
        positions = np.array([[0, 0, 0], [2, 1, 1]], dtype=float)
        cloud = PointCloud(positions, np.full((2, 3), 0.5))
        normalized, transform = normalize(cloud)
        assert transform.scale == pytest.approx(0.5)
        assert normalized.positions[1][0] == pytest.approx(1.0, abs=1e-12)
        assert normalized.positions[1][1] == pytest.approx(0.5)

    def test_identity_when_already_unit(self):
        positions = np.array([[0, 0, 0], [1, 0.8, 0.9]])
        cloud = PointCloud(positions, np.full((2, 3), 0.5))
        normalized, transform = normalize(cloud)
        assert transform.scale == 1.0
        assert np.array_equal(transform.translation, [0, 0, 0])
        assert np.array_equal(normalized.positions, positions)

    def test_degenerate_cloud(self):
        positions = np.tile([[3.0, 3.0, 3.0]], (5, 1))
        cloud = PointCloud(positions, np.full((5, 3), 0.5))
        with pytest.raises(DegenerateCloud):
            normalize(cloud)

    def test_output_in_unit_cube_and_longest_extent_one(self, rng):
        for _ in range(20):
            positions = rng.normal(scale=50.0, size=(30, 3)) + rng.normal(scale=100, size=3)
            cloud = PointCloud(positions, np.full((30, 3), 0.5))
            normalized, _ = normalize(cloud)
            assert normalized.positions.min() >= 0.0
            assert normalized.positions.max() <= 1.0
            extent = normalized.positions.max(0) - normalized.positions.min(0)
            assert extent.max() == pytest.approx(1.0, abs=1e-12)

    @given(
        st.lists(
            st.tuples(
                st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)
            ),
            min_size=2,
            max_size=40,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, raw_points):
        positions = np.array(raw_points)
        if (positions.max(0) - positions.min(0)).max() <= 0:
            return
        cloud = PointCloud(positions, np.full_like(positions, 0.5))
        normalized, transform = normalize(cloud)
        back = transform.invert(normalized.positions)
        assert np.abs(back - positions).max() <= 1e-9 * max(1.0, np.abs(positions).max())


class TestPointMaskFile:
    def test_round_trip(self, tmp_path):
        mask = np.array([True, False, True])
        path = tmp_path / "m.mask"
        save_point_mask(mask, path)
        assert path.read_text() == "n=3\n0\n2\n"
        assert np.array_equal(load_point_mask(path), mask)

    def test_all_zero(self, tmp_path):
        path = tmp_path / "z.mask"
        save_point_mask(np.zeros(4, dtype=bool), path)
        assert path.read_text() == "n=4\n"
        assert np.array_equal(load_point_mask(path), np.zeros(4, dtype=bool))

    def test_length_mismatch(self, tmp_path):
        with pytest.raises(LengthMismatch):
            save_point_mask(np.ones(3, dtype=bool), tmp_path / "x.mask", n=5)

    def test_load_rejects_descending(self, tmp_path):
        path = tmp_path / "bad.mask"
        path.write_text("n=3\n2\n0\n")
        with pytest.raises(MalformedRecord):
            load_point_mask(path)

    @settings(max_examples=50, deadline=None)
    @given(bits=st.lists(st.booleans(), min_size=1, max_size=200))
    def test_round_trip_property(self, bits, tmp_path_factory):
        mask = np.array(bits, dtype=bool)
        path = tmp_path_factory.mktemp("masks") / "m.mask"
        save_point_mask(mask, path)
        assert np.array_equal(load_point_mask(path), mask)


class TestTransform:
    def test_apply_invert_identity(self, rng):
        transform = NormalizationTransform(translation=np.array([1.5, -2.0, 0.25]), scale=0.125)
        points = rng.random((10, 3)) * 8
        assert np.allclose(transform.invert(transform.apply(points)), points, atol=1e-12)

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            NormalizationTransform(scale=0.0)
