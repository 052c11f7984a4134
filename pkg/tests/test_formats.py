import numpy as np
import pytest

from ctmhopfield import formats
from ctmhopfield.basis import make_rectangular_basis
from ctmhopfield.config import ConfigError, RunConfig
from ctmhopfield.memfit import fit_continuous_memory


@pytest.fixture
def matrix():
    return np.random.default_rng(0).normal(size=(13, 5)) * 10.0 ** np.arange(-2, 3)


class TestMatrixFile:
    def test_binary_round_trip_bit_exact(self, tmp_path, matrix):
        path = tmp_path / "m.bin"
        formats.save_matrix(path, matrix)
        loaded = formats.load_matrix(path)
        assert loaded.tobytes() == matrix.tobytes()

    def test_header_layout(self, matrix):
        buf = formats.matrix_to_bytes(matrix)
        assert buf[:8] == b"CTMHMAT1"
        assert int.from_bytes(buf[8:16], "little") == 13
        assert int.from_bytes(buf[16:24], "little") == 5
        assert buf[24:28] == b"f8le"
        assert len(buf) == 28 + 13 * 5 * 8
        np.testing.assert_array_equal(np.frombuffer(buf[28:], "<f8").reshape(13, 5), matrix)

    @pytest.mark.parametrize("header", [False, True])
    def test_csv_round_trip(self, tmp_path, matrix, header):
        path = tmp_path / "m.csv"
        formats.save_matrix(path, matrix, header=header)
        text = path.read_text()
        assert text.startswith("x0,") == header
        assert formats.load_matrix(path).tobytes() == matrix.tobytes()

    def test_hand_written_csv(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("1, 2\n3,4.5\n\n")
        np.testing.assert_array_equal(formats.load_matrix(path), [[1, 2], [3, 4.5]])

    def test_truncated_payload(self, matrix):
        buf = formats.matrix_to_bytes(matrix)
        with pytest.raises(formats.FormatError):
            formats.matrix_from_bytes(buf[:-8])
        with pytest.raises(formats.FormatError):
            formats.matrix_from_bytes(buf + b"\0" * 8)

    def test_non_finite_reports_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,nan\n")
        with pytest.raises(formats.FormatError, match="row 1"):
            formats.load_matrix(path)
        bad = np.ones((3, 2))
        bad[2, 1] = np.inf
        with pytest.raises(formats.FormatError, match="row 2"):
            formats.matrix_from_bytes(formats.matrix_to_bytes(bad))

    def test_binary_garbage(self, tmp_path):
        path = tmp_path / "junk"
        path.write_bytes(b"\xff\xfe\x00\x01")
        with pytest.raises(formats.FormatError):
            formats.load_matrix(path)


class TestModelFile:
    def test_round_trip_bit_exact(self, tmp_path, matrix):
        cm = fit_continuous_memory(matrix, make_rectangular_basis(4), 0.003)
        path = tmp_path / "model.ctm"
        checksum = formats.memory_checksum(matrix)
        formats.save_model(path, cm, checksum)
        loaded, header = formats.load_model(path)
        assert loaded.coeffs.tobytes() == cm.coeffs.tobytes()
        assert loaded.basis == cm.basis
        assert loaded.lam == cm.lam
        np.testing.assert_array_equal(loaded.times, cm.times)
        assert header["source_sha256"] == checksum
        assert formats.model_to_bytes(loaded, checksum) == path.read_bytes()

    def test_model_is_not_a_matrix(self, tmp_path, matrix):
        cm = fit_continuous_memory(matrix, make_rectangular_basis(4), 0.003)
        path = tmp_path / "model.ctm"
        formats.save_model(path, cm, "x")
        assert formats.is_model_file(path)
        with pytest.raises(formats.FormatError):
            formats.load_matrix(path)

    def test_corrupt_header(self, matrix):
        cm = fit_continuous_memory(matrix, make_rectangular_basis(4), 0.003)
        buf = bytearray(formats.model_to_bytes(cm, "x"))
        buf[12] = ord("!")
        with pytest.raises(formats.FormatError):
            formats.model_from_bytes(bytes(buf))

    def test_checksum_sensitive_to_values_and_shape(self, matrix):
        base = formats.memory_checksum(matrix)
        changed = matrix.copy()
        changed[3, 1] = np.nextafter(changed[3, 1], np.inf)
        assert formats.memory_checksum(changed) != base
        assert formats.memory_checksum(matrix.reshape(5, 13)) != base


class TestRunConfig:
    def test_defaults_round_trip(self):
        cfg = RunConfig()
        assert RunConfig.from_text(cfg.to_text()) == cfg

    def test_full_round_trip(self):
        cfg = RunConfig(
            kind="line",
            l=40,
            d=2,
            seeds=(3, 1, 4),
            line_start=(-1.0, 0.1),
            line_end=(2.0, 1.0 / 3.0),
            corruption="mask_fraction",
            fraction=0.25,
            model=("discrete",),
            l_sub=(None, 7),
            lam=(1e-4, 0.1 + 0.2),
            beta=("invsqrtd", 1.0),
            quad=("exact", "trapezoid:77"),
            tol=1e-9,
            max_iters=12,
            out="res.csv",
        )
        text = cfg.to_text()
        assert RunConfig.from_text(text) == cfg
        assert "lambda = 0.0001, 0.30000000000000004" in text

    def test_comments_and_spacing(self):
        cfg = RunConfig.from_text("# sweep\nn=32,64 ,128\n  beta = 1   # inline\n")
        assert cfg.n == (32, 64, 128) and cfg.beta == (1.0,)

    @pytest.mark.parametrize(
        "text, key",
        [
            ("colour = red\n", "colour"),
            ("n = 3, x\n", "n"),
            ("l = 10\nl_sub = 11\n", "l_sub"),
            ("quad = simpson\n", "quad"),
            ("kind = torus\n", "kind"),
            ("lambda = 0\n", "lambda"),
            ("n = 4\nn = 5\n", "n"),
            ("seeds\n", "seeds"),
        ],
    )
    def test_errors_name_key(self, text, key):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_text(text)
        assert info.value.key == key
        assert repr(key) in str(info.value)

    def test_beta_resolution(self):
        cfg = RunConfig(d=64)
        assert cfg.resolve_beta("invsqrtd") == 0.125
        assert cfg.resolve_beta(2.0) == 2.0
