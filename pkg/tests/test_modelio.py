import struct
import zlib

import numpy as np
import pytest

from conftest import tone_wave
from echomem import modelio, pipeline
from echomem.errors import (
    ModelChecksumError,
    ModelFormatError,
    ModelTruncatedError,
    ModelVersionError,
)
from echomem.hopfield import DynamicsConfig
from echomem.spectrum import EncodingConfig


def reseal(body: bytes) -> bytes:
    return body + struct.pack("<I", zlib.crc32(body))


def test_round_trip(tone_model, tmp_path):
    path = tmp_path / "m.echm"
    modelio.write_model_file(tone_model, path)
    back = modelio.read_model_file(path)
    assert back == tone_model
    assert back.weights.tobytes() == tone_model.weights.tobytes()
    for f in (46_000, 55_000, 70_000):
        a = pipeline.classify(tone_model, tone_wave(f))
        b = pipeline.classify(back, tone_wave(f))
        assert (a.label, a.iterations, a.overlap) == (b.label, b.iterations, b.overlap)


def test_round_trip_with_options():
    cfg = EncodingConfig(n_neurons=32, activation_threshold=0.3, fft_length=2048)
    dyn = DynamicsConfig(max_iterations=17, bias=np.linspace(-0.1, 0.1, 32), tie_tol=1e-8)
    m = pipeline.train([("Ä", tone_wave(46_000)), ("B", tone_wave(60_000))], cfg, dyn, band_reject=True)
    back = modelio.load_model(modelio.save_model(m))
    assert back == m
    assert back.band_reject and back.class_labels == ("Ä", "B")
    assert np.array_equal(back.dynamics.bias, dyn.bias)


def test_save_is_deterministic(tone_model):
    assert modelio.save_model(tone_model) == modelio.save_model(tone_model)


def test_version_mismatch(tone_model):
    raw = bytearray(modelio.save_model(tone_model))
    raw[4] ^= 0xFF
    with pytest.raises(ModelVersionError):
        modelio.load_model(bytes(raw))


def test_truncated_inside_weights(tone_model):
    raw = modelio.save_model(tone_model)
    cut = len(raw) - 4 - 8 * 64 * 64 // 2
    with pytest.raises(ModelTruncatedError):
        modelio.load_model(raw[:cut])


@pytest.mark.parametrize("cut", [0, 2, 4, 11])
def test_truncated_header(tone_model, cut):
    with pytest.raises(ModelTruncatedError):
        modelio.load_model(modelio.save_model(tone_model)[:cut] if cut >= 4 else b"ECHM"[:cut])


def test_checksum_detects_payload_corruption(tone_model):
    raw = bytearray(modelio.save_model(tone_model))
    raw[len(raw) - 100] ^= 0x01
    with pytest.raises(ModelChecksumError):
        modelio.load_model(bytes(raw))


def test_bad_magic(tone_model):
    raw = b"XXXX" + modelio.save_model(tone_model)[4:]
    with pytest.raises(ModelFormatError) as exc:
        modelio.load_model(raw)
    assert type(exc.value) is ModelFormatError


def test_trailing_bytes(tone_model):
    with pytest.raises(ModelFormatError):
        modelio.load_model(modelio.save_model(tone_model) + b"\x00")


def test_inconsistent_contents_with_valid_checksum(tone_model):
    raw = modelio.save_model(tone_model)
    body = bytearray(raw[:-4])
    # last pattern entry sits just before the weights
    body[len(body) - 8 * 64 * 64 - 1] = 0
    with pytest.raises(ModelFormatError):
        modelio.load_model(reseal(bytes(body)))


def test_errors_are_distinct_types():
    kinds = {ModelVersionError, ModelTruncatedError, ModelChecksumError}
    assert all(issubclass(k, ModelFormatError) for k in kinds)
    assert len(kinds) == 3
