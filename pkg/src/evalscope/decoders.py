"""Image decoding: PPM and PNG (lossless), JPEG through pluggable decoders.

Lossless formats decode to exactly the stored pixel values. JPEG decoding
is implementation-dependent by nature, so it goes through a named plugin;
the plugin identity and requested DCT method are reported alongside the
pixels and end up in the evaluation's pipeline provenance. The default
plugin is the package's own deterministic decoder ("builtin"); "pillow"
uses whatever libjpeg the host's Pillow links against.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jpegdec


class ImageDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeInfo:
    """Provenance of one decode: container format, decoder identity, DCT method."""

    format: str
    decoder: str
    dct_method: str | None = None

    def to_json_obj(self) -> dict:
        obj = {"format": self.format, "decoder": self.decoder}
        if self.dct_method is not None:
            obj["dct_method"] = self.dct_method
        return obj


JpegDecoder = Callable[[bytes, str], np.ndarray]


def _builtin_jpeg(data: bytes, dct_method: str) -> np.ndarray:
    try:
        return jpegdec.decode(data, dct_method)
    except jpegdec.JpegError as exc:
        raise ImageDecodeError(str(exc)) from exc


def _pillow_jpeg(data: bytes, dct_method: str) -> np.ndarray:
    # Pillow does not expose libjpeg's DCT method; the request is recorded
    # in provenance but decoding uses the library default.
    from PIL import Image

    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ImageDecodeError(f"pillow failed to decode JPEG: {exc}") from exc


JPEG_DECODERS: dict[str, JpegDecoder] = {
    "builtin": _builtin_jpeg,
    "pillow": _pillow_jpeg,
}

DEFAULT_JPEG_DECODER = "builtin"


def register_jpeg_decoder(name: str, decoder: JpegDecoder) -> None:
    JPEG_DECODERS[name] = decoder


def sniff_format(data: bytes) -> str:
    if data[:2] == b"P6":
        return "ppm"
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return "png"
    if data[:2] == b"\xff\xd8":
        return "jpeg"
    raise ImageDecodeError("unsupported image format (expected PPM P6, PNG, or JPEG)")


def _read_ppm(data: bytes) -> np.ndarray:
    pos = 2  # past "P6"

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageDecodeError("truncated PPM header")
        return data[start:pos]

    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise ImageDecodeError(f"malformed PPM header: {exc}") from exc
    if maxval != 255:
        raise ImageDecodeError(f"unsupported PPM maxval {maxval} (must be 255)")
    pos += 1  # single whitespace after maxval
    expected = width * height * 3
    body = data[pos : pos + expected]
    if len(body) != expected:
        raise ImageDecodeError(
            f"truncated PPM data: expected {expected} bytes, got {len(body)}"
        )
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(pixels: np.ndarray) -> bytes:
    """Serialize an (H, W, 3) uint8 RGB array as binary PPM."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("write_ppm expects an (H, W, 3) uint8 array")
    h, w = pixels.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def _read_png(data: bytes) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ImageDecodeError(f"failed to decode PNG: {exc}") from exc


def decode_rgb(
    data: bytes,
    dct_method: str = "integer_accurate",
    jpeg_decoder: str = DEFAULT_JPEG_DECODER,
) -> tuple[np.ndarray, DecodeInfo]:
    """Decode raw bytes to an (H, W, 3) uint8 RGB array plus provenance."""
    fmt = sniff_format(data)
    if fmt == "ppm":
        return _read_ppm(data), DecodeInfo("ppm", "builtin")
    if fmt == "png":
        return _read_png(data), DecodeInfo("png", "pillow")
    decoder = JPEG_DECODERS.get(jpeg_decoder)
    if decoder is None:
        known = ", ".join(sorted(JPEG_DECODERS))
        raise ImageDecodeError(f"unknown JPEG decoder {jpeg_decoder!r} (registered: {known})")
    return decoder(data, dct_method), DecodeInfo("jpeg", jpeg_decoder, dct_method)
