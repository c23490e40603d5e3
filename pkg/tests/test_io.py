"""
Tests for Volume I/O
====================

VOLSR container layout and error handling, FieldMeta sidecars, raw
ingestion, the synthetic generator, plane extraction and PGM export.
"""

import struct

import numpy as np
import pytest
from scipy.stats import spearmanr

from volsr.errors import (
    ConfigError,
    ContractViolationError,
    FormatError,
    MagicMismatchError,
    PayloadLengthError,
    ShapeError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from volsr.io import (
    CHANNEL_DOMAIN,
    VolumeField,
    decode_volume,
    encode_volume,
    export_pgm,
    extract_plane,
    field_hash,
    ingest_raw,
    read_field_meta,
    read_pgm,
    read_volume,
    sha256_file,
    synth_field,
    synth_modes,
    write_volume,
)
from volsr.io.planes import quantize
from volsr.io.volume import MAGIC, meta_path


def _indexed_field(dtype=np.float32, components=('u',)):
    ix, iy, iz = np.meshgrid(np.arange(2), np.arange(3), np.arange(4), indexing='ij')
    data = {name: (ix + 10 * iy + 100 * iz + 1000 * n).astype(dtype) for n, name in enumerate(components)}
    return VolumeField((2, 3, 4), components, (1.0, 2.0, 3.0), 5, data)


# =============================================================================
# Container
# =============================================================================

class TestContainerLayout:
    """Byte-level layout of the container."""

    def test_header_bytes(self):
        blob = encode_volume(_indexed_field())
        assert blob[:8] == MAGIC
        version, header_len = struct.unpack_from('<II', blob, 8)
        assert version == 1
        assert header_len == 52 + 2
        dims = struct.unpack_from('<3I', blob, 16)
        ncomp, code = struct.unpack_from('<IB', blob, 28)
        assert dims == (2, 3, 4)
        assert (ncomp, code) == (1, 1)
        assert struct.unpack_from('<3dq', blob, 36) == (1.0, 2.0, 3.0, 5)
        assert blob[68:70] == b'\x01u'

    def test_payload_is_x_fastest(self):
        blob = encode_volume(_indexed_field())
        payload = np.frombuffer(blob[70:], dtype='<f4')
        np.testing.assert_array_equal(payload[:4], [0, 1, 10, 11])
        assert payload.size == 24

    def test_size(self):
        volume = _indexed_field(np.float64, ('u', 'v', 'w'))
        assert len(encode_volume(volume)) == 16 + 52 + 6 + 3 * 24 * 8

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_bit_exact_rewrite(self, dtype):
        volume = _indexed_field(dtype, ('u', 'w'))
        blob = encode_volume(volume)
        decoded = decode_volume(blob)
        assert decoded.components == ('u', 'w')
        assert decoded.dtype == dtype
        assert encode_volume(decoded) == blob

    def test_repeated_writes_identical(self, tmp_path, small_field):
        a = write_volume(small_field, tmp_path / 'a.volsr')
        b = write_volume(small_field, tmp_path / 'b.volsr')
        assert sha256_file(a) == sha256_file(b)
        assert field_hash(small_field) == sha256_file(a)


class TestContainerErrors:
    """Typed decoding failures."""

    def test_bad_magic(self):
        blob = bytearray(encode_volume(_indexed_field()))
        blob[0:1] = b'X'
        with pytest.raises(MagicMismatchError):
            decode_volume(bytes(blob))

    def test_future_version(self):
        blob = bytearray(encode_volume(_indexed_field()))
        struct.pack_into('<I', blob, 8, 2)
        with pytest.raises(UnsupportedVersionError):
            decode_volume(bytes(blob))

    def test_truncated_payload(self):
        blob = encode_volume(_indexed_field())
        with pytest.raises(TruncatedPayloadError):
            decode_volume(blob[:-4])

    def test_truncated_preamble(self):
        with pytest.raises(TruncatedPayloadError):
            decode_volume(MAGIC)

    def test_trailing_bytes(self):
        blob = encode_volume(_indexed_field())
        with pytest.raises(PayloadLengthError):
            decode_volume(blob + b'\0\0\0\0')

    def test_non_ascii_label(self):
        blob = bytearray(encode_volume(_indexed_field()))
        blob[69] = 0xFF
        with pytest.raises(FormatError, match='not ASCII'):
            decode_volume(bytes(blob))

    def test_unknown_label(self):
        blob = bytearray(encode_volume(_indexed_field()))
        blob[69:70] = b'p'
        with pytest.raises(FormatError, match='unknown component label'):
            decode_volume(bytes(blob))

    def test_error_exit_codes(self):
        assert MagicMismatchError.exit_code == 3
        assert PayloadLengthError.exit_code == 3


class TestVolumeField:

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            VolumeField((2, 2, 2), ('u',), (1, 1, 1), 0, {'u': np.zeros((2, 2, 3))})

    def test_non_finite_rejected(self):
        grid = np.zeros((2, 2, 2))
        grid[1, 1, 1] = np.inf
        with pytest.raises(ContractViolationError):
            VolumeField((2, 2, 2), ('u',), (1, 1, 1), 0, {'u': grid})

    def test_mixed_dtypes_rejected(self):
        with pytest.raises(ContractViolationError):
            VolumeField((2, 2, 2), ('u', 'v'), (1, 1, 1), 0,
                        {'u': np.zeros((2, 2, 2), np.float32), 'v': np.zeros((2, 2, 2), np.float64)})

    def test_unknown_label_rejected(self):
        with pytest.raises(ContractViolationError, match='unknown component labels'):
            VolumeField((2, 2, 2), ('p',), (1, 1, 1), 0, {'p': np.zeros((2, 2, 2))})

    def test_mask_label_accepted(self):
        volume = VolumeField((2, 2, 2), ('mask',), (1, 1, 1), 0, {'mask': np.ones((2, 2, 2))})
        assert decode_volume(encode_volume(volume)).components == ('mask',)

    def test_select(self):
        volume = _indexed_field(components=('u', 'v', 'w'))
        sub = volume.select(['w'])
        assert sub.components == ('w',)
        np.testing.assert_array_equal(sub.component('w'), volume.component('w'))
        with pytest.raises(ContractViolationError):
            sub.component('u')


class TestFieldMeta:

    def test_sidecar_mirrors_header(self, tmp_path):
        path = write_volume(_indexed_field(np.float64, ('u', 'v')), tmp_path / 'f.volsr')
        meta = read_field_meta(meta_path(path))
        assert meta.dims == (2, 3, 4)
        assert meta.components == ('u', 'v')
        assert meta.dtype == 'f64'
        assert meta.endianness == 'little'
        assert meta.time_tag == 5

    def test_read_volume(self, tmp_path):
        volume = _indexed_field()
        path = write_volume(volume, tmp_path / 'nested' / 'f.volsr', sidecar=False)
        assert not meta_path(path).exists()
        np.testing.assert_array_equal(read_volume(path).component('u'), volume.component('u'))


# =============================================================================
# Raw ingestion
# =============================================================================

class TestIngest:

    def test_x_fastest(self, tmp_path):
        raw = tmp_path / 'u.raw'
        np.arange(24, dtype='<f4').tofile(raw)
        volume = ingest_raw(raw, (2, 3, 4))
        grid = volume.component('u')
        assert grid[1, 0, 0] == 1 and grid[0, 1, 0] == 2 and grid[0, 0, 1] == 6

    def test_z_fastest_multi_component(self, tmp_path):
        raw = tmp_path / 'uv.raw'
        np.arange(48, dtype='<f8').tofile(raw)
        volume = ingest_raw(raw, (2, 3, 4), dtype='f64', components=('u', 'v'), order='z-fastest')
        np.testing.assert_array_equal(volume.component('u'), np.arange(24.0).reshape(2, 3, 4))
        np.testing.assert_array_equal(volume.component('v'), np.arange(24.0, 48.0).reshape(2, 3, 4))

    def test_size_errors(self, tmp_path):
        raw = tmp_path / 'u.raw'
        np.zeros(23, dtype='<f4').tofile(raw)
        with pytest.raises(TruncatedPayloadError):
            ingest_raw(raw, (2, 3, 4))
        np.zeros(25, dtype='<f4').tofile(raw)
        with pytest.raises(PayloadLengthError):
            ingest_raw(raw, (2, 3, 4))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ingest_raw(tmp_path / 'absent.raw', (2, 2, 2))


# =============================================================================
# Synthetic fields
# =============================================================================

class TestSynth:
    """Synthetic channel-like fields."""

    def test_deterministic(self):
        a = synth_field((16, 12, 8), seed=3, num_modes=16)
        b = synth_field((16, 12, 8), seed=3, num_modes=16)
        c = synth_field((16, 12, 8), seed=4, num_modes=16)
        assert field_hash(a) == field_hash(b)
        assert field_hash(a) != field_hash(c)

    def test_walls_are_zero(self):
        volume = synth_field((16, 10, 8), seed=1, num_modes=16, mean_velocity=1.5)
        for name in volume.components:
            grid = volume.component(name)
            assert np.all(grid[:, 0, :] == 0.0)
            assert np.all(grid[:, -1, :] == 0.0)

    def test_mean_profile_on_u_only(self):
        base = synth_field((8, 9, 8), seed=2, num_modes=8)
        shifted = synth_field((8, 9, 8), seed=2, num_modes=8, mean_velocity=2.0)
        np.testing.assert_allclose(shifted.component('u')[:, 4, :] - base.component('u')[:, 4, :], 2.0)
        np.testing.assert_array_equal(shifted.component('v'), base.component('v'))

    def test_defaults(self):
        volume = synth_field((8, 8, 8), num_modes=4, components=('u',))
        assert volume.domain == CHANNEL_DOMAIN
        assert volume.dtype == np.float64

    def test_mode_table(self):
        tables = synth_modes(seed=11, num_modes=200, max_wavenumber=6, components=('u', 'w'))
        assert list(tables) == ['u', 'w']
        k = tables['u'].wavevectors
        assert np.all(np.any(k != 0, axis=1))
        assert np.all(k[:, 1] >= 0)
        assert np.abs(k).max() <= 6
        assert 0.5 * np.sum(tables['u'].power) == pytest.approx(1.0)

    def test_spectrum_decays_with_wavenumber(self):
        """Mode power is rank-anticorrelated with |k|."""
        table = synth_modes(seed=5, num_modes=300)['u']
        rho = spearmanr(table.magnitudes, table.power).correlation
        assert rho < -0.99

    def test_field_energy_shifts_to_large_scales(self):
        """A steeper exponent concentrates energy at low wavenumbers."""
        def high_k_fraction(exponent):
            u = synth_field((32, 9, 32), seed=8, num_modes=128, spectrum_exponent=exponent).component('u')
            power = np.abs(np.fft.fft2(u[:, 4, :])) ** 2
            kx = np.abs(np.fft.fftfreq(32, 1 / 32))
            high = (kx[:, None] > 4) | (kx[None, :] > 4)
            return power[high].sum() / power.sum()

        assert high_k_fraction(-3.0) < high_k_fraction(-5.0 / 3.0)

    def test_rejects_small_dims(self):
        with pytest.raises(ContractViolationError):
            synth_field((4, 8, 8))
        with pytest.raises(ContractViolationError):
            synth_field((8, 8, 8), components=('p',))


# =============================================================================
# Planes and PGM export
# =============================================================================

class TestPlanes:

    def test_extract_orientation(self):
        volume = _indexed_field()
        plane = extract_plane(volume, 'z', 2, 'u')
        assert plane.axes == ('x', 'y')
        np.testing.assert_array_equal(plane.values, volume.component('u')[:, :, 2])
        assert extract_plane(volume, 'x', 1, 'u').values.shape == (3, 4)

    def test_extract_out_of_range(self):
        with pytest.raises(ContractViolationError):
            extract_plane(_indexed_field(), 'y', 3, 'u')
        with pytest.raises(ContractViolationError):
            extract_plane(_indexed_field(), 'q', 0, 'u')

    def test_quantize_constant(self):
        pixels, scale = quantize(np.full((3, 3), 4.2))
        assert np.all(pixels == 128)
        assert scale.min == scale.max == 4.2

    def test_pgm_round_trip(self, tmp_path, rng):
        values = rng.standard_normal((4, 6))
        path = export_pgm(values, tmp_path / 'plane.pgm')
        assert path.read_bytes()[:2] == b'P5'
        pixels, scale = read_pgm(path)
        assert pixels.shape == (4, 6)
        expected, _ = quantize(values)
        np.testing.assert_array_equal(pixels, expected)
        step = (values.max() - values.min()) / 255.0
        assert np.max(np.abs(scale.decode(pixels) - values)) <= 0.5 * step + 1e-12
