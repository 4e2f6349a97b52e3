import json
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from attentive_cutmix import formats
from attentive_cutmix.attention import top_n_cells
from attentive_cutmix.augment import AugmentConfig, attentive_cutmix_pair, augment_batch
from attentive_cutmix.errors import (
    BadMagicError,
    ConsistencyError,
    FormatError,
    InvalidValueError,
    TrailingBytesError,
    TruncatedError,
    VersionError,
)
from attentive_cutmix.extractor import random_weights
from attentive_cutmix.pipeline import attention_source, resize_nearest
from attentive_cutmix.rng import RngStream
from attentive_cutmix.tensor import one_hot

from helpers import random_image


def _cifar10_record(label, r=0, g=0, b=0):
    return bytes([label]) + bytes([r]) * 1024 + bytes([g]) * 1024 + bytes([b]) * 1024


# -- CIFAR ---------------------------------------------------------------


def test_cifar10_empty():
    assert formats.parse_cifar10(b"") == []


def test_cifar10_red_record():
    (rec,) = formats.parse_cifar10(_cifar10_record(7, r=255))
    assert rec.fine_label == 7 and rec.coarse_label is None
    assert rec.image.shape == (32, 32, 3)
    assert np.all(rec.image[:, :, 0] == 1.0)
    assert np.all(rec.image[:, :, 1:] == 0.0)


def test_cifar10_planar_layout():
    pixels = np.arange(3072, dtype=np.uint32) % 256
    (rec,) = formats.parse_cifar10(bytes([1]) + pixels.astype(np.uint8).tobytes())
    # channel c, row y, column x lives at byte c*1024 + y*32 + x
    for c, y, x in [(0, 0, 5), (1, 3, 7), (2, 31, 31)]:
        assert rec.image[y, x, c] == np.float32(pixels[c * 1024 + y * 32 + x]) / np.float32(255)


def test_cifar10_errors():
    with pytest.raises(FormatError, match="multiple of 3073"):
        formats.parse_cifar10(bytes(3072))
    with pytest.raises(InvalidValueError, match="record 1"):
        formats.parse_cifar10(_cifar10_record(3) + _cifar10_record(10))


def test_cifar100_labels():
    data = bytes([3, 42]) + bytes(3072)
    (rec,) = formats.parse_cifar100(data)
    assert (rec.coarse_label, rec.fine_label) == (3, 42)
    assert formats.parse_cifar100(b"") == []
    with pytest.raises(InvalidValueError, match="fine"):
        formats.parse_cifar100(bytes([3, 100]) + bytes(3072))
    with pytest.raises(InvalidValueError, match="coarse"):
        formats.parse_cifar100(bytes([20, 1]) + bytes(3072))


def test_pixel_scaling_requantizes_every_byte():
    values = np.arange(256, dtype=np.uint8)
    scaled = values.astype(np.float32) / np.float32(255)
    np.testing.assert_array_equal(formats.quantize(scaled), values)


@settings(max_examples=30, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(st.tuples(st.integers(0, 19), st.integers(0, 99), st.binary(min_size=3072, max_size=3072)),
                max_size=3))
def test_cifar_round_trip(recs):
    c100 = b"".join(bytes([c, f]) + px for c, f, px in recs)
    assert formats.serialize_cifar100(formats.parse_cifar100(c100)) == c100
    c10 = b"".join(bytes([f % 10]) + px for _, f, px in recs)
    assert formats.serialize_cifar10(formats.parse_cifar10(c10)) == c10


# -- ATNG / ATNW -----------------------------------------------------------


def test_atng_known_values_bit_exact():
    values = (np.arange(49, dtype=np.float32) * np.float32(0.37)).reshape(7, 7)
    data = formats.dump_attention_file(values)
    assert data[:4] == b"ATNG" and struct.unpack("<II", data[4:12]) == (1, 7)
    assert len(data) == 12 + 49 * 4
    grid = formats.load_attention_file(data)
    assert grid.astype(np.float32).tobytes() == values.tobytes()


def test_atng_errors():
    good = formats.dump_attention_file(np.ones((7, 7)))
    with pytest.raises(BadMagicError):
        formats.load_attention_file(b"XXXX" + good[4:])
    with pytest.raises(VersionError):
        formats.load_attention_file(good[:4] + struct.pack("<I", 2) + good[8:])
    with pytest.raises(TruncatedError):
        formats.load_attention_file(good[:12])
    with pytest.raises(TruncatedError):
        formats.load_attention_file(good[:2])
    with pytest.raises(TrailingBytesError):
        formats.load_attention_file(good + b"\0")
    for bad in (-1.0, np.nan):
        payload = np.ones(49, np.float32)
        payload[10] = bad
        with pytest.raises(InvalidValueError):
            formats.load_attention_file(good[:12] + payload.tobytes())


@settings(max_examples=100)
@given(st.integers(1, 12).flatmap(
    lambda g: hnp.arrays(np.float32, (g, g), elements=st.floats(0, 2.0**100, width=32))))
def test_atng_round_trip(grid):
    data = formats.dump_attention_file(grid)
    assert formats.dump_attention_file(formats.load_attention_file(data)) == data


def test_atnw_round_trip_and_errors():
    w = random_weights(3)
    data = formats.dump_weights_file(w)
    assert formats.load_weights_file(data) == w
    assert formats.dump_weights_file(formats.load_weights_file(data)) == data
    with pytest.raises(BadMagicError):
        formats.load_weights_file(b"ATNG" + data[4:])
    with pytest.raises(TruncatedError):
        formats.load_weights_file(data[:-1])
    with pytest.raises(InvalidValueError, match="layer 1"):
        formats.load_weights_file(_raw_weights([(8, 3, 3, 3), (16, 9, 3, 3)]))
    with pytest.raises(InvalidValueError, match="zero dimension"):
        formats.load_weights_file(_raw_weights([(8, 0, 3, 3)]))


def _raw_weights(shapes):
    parts = [b"ATNW", struct.pack("<II", 1, len(shapes))]
    for shape in shapes:
        parts.append(struct.pack("<IIII", *shape))
        parts.append(bytes(4 * int(np.prod(shape)) + 4 * shape[0]))
    return b"".join(parts)


# -- ATNB + manifest --------------------------------------------------------


def _samples(rng, b=4, method="attentive_cutmix"):
    images = [random_image(rng) for _ in range(b)]
    labels = [one_hot(int(rng.integers(10)), 10) for _ in range(b)]
    return augment_batch(images, labels, AugmentConfig(method=method),
                         attention_source("gradient_energy", 7), RngStream(4))


@pytest.mark.parametrize("method", ["attentive_cutmix", "cutmix", "cutout", "mixup"])
def test_batch_round_trip(rng, tmp_path, method):
    samples = _samples(rng, 4, method)
    ip, mp = tmp_path / "b.atnb", tmp_path / "b.json"
    formats.write_batch(samples, ip, mp, config={"grid_size": 7, "n_patches": 6}, master_seed=4)
    back = formats.read_batch(ip, mp)
    assert back == samples
    formats.write_batch(back, tmp_path / "c.atnb", tmp_path / "c.json", config={"grid_size": 7, "n_patches": 6},
                        master_seed=4)
    assert (tmp_path / "c.atnb").read_bytes() == ip.read_bytes()
    assert (tmp_path / "c.json").read_bytes() == mp.read_bytes()


def test_manifest_lambda_is_exact_decimal(rng, tmp_path):
    x1 = resize_nearest(random_image(rng), 224)
    x2 = resize_nearest(random_image(rng), 224)
    s = attentive_cutmix_pair(x1, one_hot(0, 10), x2, one_hot(1, 10), rng.random((7, 7)), 6)
    formats.write_batch([s], tmp_path / "a.atnb", tmp_path / "a.json")
    text = (tmp_path / "a.json").read_text()
    assert f'"lambda": {6 / 49!r}' in text
    assert json.loads(text)["samples"][0]["lambda"] == 6 / 49


def test_write_batch_errors(rng, tmp_path):
    with pytest.raises(ValueError):
        formats.write_batch([], tmp_path / "a", tmp_path / "b")
    a = _samples(rng, 2)[0]
    small = attentive_cutmix_pair(np.zeros((8, 8, 3)), one_hot(0, 2), np.zeros((8, 8, 3)), one_hot(1, 2),
                                  np.ones((7, 7)), 1)
    with pytest.raises(ValueError):
        formats.write_batch([a, small], tmp_path / "a", tmp_path / "b")


def test_read_batch_errors(rng, tmp_path):
    samples = _samples(rng, 3)
    ip, mp = tmp_path / "b.atnb", tmp_path / "b.json"
    formats.write_batch(samples, ip, mp)
    data = ip.read_bytes()
    (tmp_path / "bad.atnb").write_bytes(b"NOPE" + data[4:])
    with pytest.raises(BadMagicError):
        formats.read_batch(tmp_path / "bad.atnb", mp)
    (tmp_path / "v.atnb").write_bytes(data[:4] + struct.pack("<I", 9) + data[8:])
    with pytest.raises(VersionError):
        formats.read_batch(tmp_path / "v.atnb", mp)
    (tmp_path / "t.atnb").write_bytes(data[:-4])
    with pytest.raises(TruncatedError):
        formats.read_batch(tmp_path / "t.atnb", mp)
    formats.write_batch(samples[:2], tmp_path / "two.atnb", tmp_path / "two.json")
    with pytest.raises(ConsistencyError):
        formats.read_batch(ip, tmp_path / "two.json")
    manifest = json.loads(mp.read_text())
    manifest["format_version"] = 2
    (tmp_path / "v.json").write_text(json.dumps(manifest))
    with pytest.raises(VersionError):
        formats.read_batch(ip, tmp_path / "v.json")


def test_atnb_header_layout(rng):
    imgs = [random_image(rng, 5, 6, 3) for _ in range(2)]
    data = formats.dump_images(imgs)
    assert data[:4] == b"ATNB"
    assert struct.unpack("<IIIII", data[4:24]) == (1, 2, 5, 6, 3)
    np.testing.assert_array_equal(np.frombuffer(data[24:], "<f4"), np.stack(imgs).ravel())


# -- fuzz -------------------------------------------------------------------

PARSERS = {
    "cifar10": formats.parse_cifar10,
    "cifar100": formats.parse_cifar100,
    "atng": formats.load_attention_file,
    "atnw": formats.load_weights_file,
    "atnb": formats.load_images,
    "manifest": formats.load_manifest,
}


def _seeds():
    rng = np.random.default_rng(0)
    samples = _samples(rng, 2)
    return {
        "cifar10": _cifar10_record(3, 10, 20, 30),
        "cifar100": bytes([1, 2]) + bytes(3072),
        "atng": formats.dump_attention_file(np.ones((3, 3))),
        "atnw": formats.dump_weights_file(random_weights(0, ((2, 3, 3, 3),))),
        "atnb": formats.dump_images([s.image[:4, :4] for s in samples]),
        "manifest": formats.dump_manifest(formats.build_manifest(samples)).encode(),
    }


SEEDS = _seeds()


def _mutate(data: bytes, ops) -> bytes:
    buf = bytearray(data)
    for kind, pos, val in ops:
        if not buf:
            buf.extend(bytes([val]))
            continue
        pos %= len(buf)
        if kind == 0:
            buf[pos] = val
        elif kind == 1:
            del buf[pos:]
        else:
            buf.insert(pos, val)
    return bytes(buf)


@pytest.mark.parametrize("name", sorted(PARSERS))
@settings(max_examples=300, deadline=None)
@given(ops=st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2**16), st.integers(0, 255)), max_size=4),
       raw=st.binary(max_size=64), use_raw=st.booleans())
def test_parsers_never_crash(name, ops, raw, use_raw):
    data = raw if use_raw else _mutate(SEEDS[name], ops)
    try:
        PARSERS[name](data)
    except FormatError:
        pass


def test_manifest_records_fuzz(rng):
    images = formats.load_images(SEEDS["atnb"])
    manifest = formats.load_manifest(SEEDS["manifest"])
    for bad in ({"method": "x"}, {"source_i": 9}, {"lambda": 2}, {"label": "abc"}, {"cells": [[9, 9]]},
                {"box": [1]}, {"lambda": None}):
        broken = json.loads(json.dumps(manifest))
        broken["samples"][0].update(bad)
        with pytest.raises(FormatError):
            formats.samples_from_manifest(broken, images)
