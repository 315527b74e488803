"""Self-contained baseline JPEG decoder.

This is the runtime's own deterministic decoder: pure numpy/Python over
integer and float64 arithmetic, so the same bytes decode to the same
pixels on every platform, independent of whatever libjpeg build the host
ships. It intentionally differs from libjpeg in well-defined ways (box
chroma upsampling, float or fixed-point IDCT selected by ``dct_method``),
which is what makes decoder-identity comparisons meaningful.

Supports baseline sequential DCT (SOF0), 8-bit precision, grayscale or
YCbCr, arbitrary sampling factors up to 2, and restart markers.
Progressive and arithmetic-coded streams are rejected.
"""

from __future__ import annotations

import numpy as np

ZIGZAG = np.array(
    [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
        12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
        35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
    ],
    dtype=np.int64,
)


class JpegError(ValueError):
    pass


def _idct_matrix() -> np.ndarray:
    a = np.zeros((8, 8))
    for u in range(8):
        c = (1.0 / np.sqrt(2.0)) if u == 0 else 1.0
        for x in range(8):
            a[u, x] = 0.5 * c * np.cos((2 * x + 1) * u * np.pi / 16.0)
    return a


_IDCT_A = _idct_matrix()
_FIXED_SHIFT = 10
_IDCT_A_FIXED = np.round(_IDCT_A * (1 << _FIXED_SHIFT)).astype(np.int64)


def _idct_accurate(block: np.ndarray) -> np.ndarray:
    spatial = _IDCT_A.T @ block.astype(np.float64) @ _IDCT_A
    shifted = spatial + 128.0
    return np.clip(np.floor(np.abs(shifted) + 0.5) * np.sign(shifted), 0, 255)


def _idct_fast(block: np.ndarray) -> np.ndarray:
    t = _IDCT_A_FIXED.T @ block.astype(np.int64) @ _IDCT_A_FIXED
    spatial = (t + (1 << (2 * _FIXED_SHIFT - 1))) >> (2 * _FIXED_SHIFT)
    return np.clip(spatial + 128, 0, 255)


class _BitReader:
    """MSB-first reader over the entropy-coded segment with byte unstuffing."""

    def __init__(self, data: bytes, pos: int) -> None:
        self.data = data
        self.pos = pos
        self.bits = 0
        self.nbits = 0

    def _fill(self) -> None:
        if self.pos >= len(self.data):
            raise JpegError("truncated entropy-coded data")
        byte = self.data[self.pos]
        self.pos += 1
        if byte == 0xFF:
            if self.pos >= len(self.data):
                raise JpegError("truncated entropy-coded data")
            marker = self.data[self.pos]
            if marker == 0x00:
                self.pos += 1
            else:
                # Marker inside scan data (e.g. premature EOI).
                raise JpegError(f"unexpected marker 0xFF{marker:02X} in scan")
        self.bits = (self.bits << 8) | byte
        self.nbits += 8

    def read_bit(self) -> int:
        if self.nbits == 0:
            self._fill()
        self.nbits -= 1
        return (self.bits >> self.nbits) & 1

    def receive(self, length: int) -> int:
        value = 0
        for _ in range(length):
            value = (value << 1) | self.read_bit()
        return value

    def align_to_marker(self) -> int:
        """Drop partial bits and consume an RST marker; returns marker byte."""
        self.bits = 0
        self.nbits = 0
        while self.pos + 1 < len(self.data) and self.data[self.pos] == 0xFF:
            marker = self.data[self.pos + 1]
            self.pos += 2
            if marker != 0xFF:
                return marker
        raise JpegError("expected restart marker")


def _extend(value: int, length: int) -> int:
    if length == 0:
        return 0
    if value < (1 << (length - 1)):
        return value - (1 << length) + 1
    return value


class _HuffTable:
    def __init__(self, counts: list[int], symbols: bytes) -> None:
        # Canonical code assignment: (length, code) -> symbol.
        self.lookup: dict[tuple[int, int], int] = {}
        code = 0
        index = 0
        for length in range(1, 17):
            for _ in range(counts[length - 1]):
                self.lookup[(length, code)] = symbols[index]
                code += 1
                index += 1
            code <<= 1

    def decode(self, reader: _BitReader) -> int:
        code = 0
        for length in range(1, 17):
            code = (code << 1) | reader.read_bit()
            symbol = self.lookup.get((length, code))
            if symbol is not None:
                return symbol
        raise JpegError("invalid Huffman code")


class _Component:
    def __init__(self, comp_id: int, h: int, v: int, tq: int) -> None:
        self.comp_id = comp_id
        self.h = h
        self.v = v
        self.tq = tq
        self.dc_table = 0
        self.ac_table = 0
        self.predictor = 0
        self.planes: np.ndarray | None = None


def decode(data: bytes, dct_method: str = "integer_accurate") -> np.ndarray:
    """Decode JPEG bytes to an RGB uint8 array of shape (H, W, 3)."""
    if dct_method not in ("integer_fast", "integer_accurate"):
        raise JpegError(f"unknown dct_method {dct_method!r}")
    idct = _idct_accurate if dct_method == "integer_accurate" else _idct_fast

    if len(data) < 4 or data[0] != 0xFF or data[1] != 0xD8:
        raise JpegError("not a JPEG stream")
    pos = 2
    qtables: dict[int, np.ndarray] = {}
    dc_tables: dict[int, _HuffTable] = {}
    ac_tables: dict[int, _HuffTable] = {}
    components: list[_Component] = []
    width = height = 0
    restart_interval = 0

    def read_u16(at: int) -> int:
        return (data[at] << 8) | data[at + 1]

    while pos < len(data):
        if data[pos] != 0xFF:
            raise JpegError(f"expected marker at offset {pos}")
        marker = data[pos + 1]
        pos += 2
        if marker == 0xD9:  # EOI
            raise JpegError("reached EOI before scan data")
        if marker in (0x01,) or 0xD0 <= marker <= 0xD7:
            continue
        length = read_u16(pos)
        segment = data[pos + 2 : pos + length]
        if marker == 0xDB:  # DQT
            i = 0
            while i < len(segment):
                pq, tq = segment[i] >> 4, segment[i] & 0x0F
                i += 1
                if pq == 0:
                    table = np.frombuffer(segment[i : i + 64], dtype=np.uint8).astype(np.int64)
                    i += 64
                else:
                    table = np.frombuffer(segment[i : i + 128], dtype=">u2").astype(np.int64)
                    i += 128
                qtables[tq] = table
        elif marker == 0xC0:  # SOF0 baseline
            height = (segment[1] << 8) | segment[2]
            width = (segment[3] << 8) | segment[4]
            ncomp = segment[5]
            if segment[0] != 8:
                raise JpegError("only 8-bit precision is supported")
            if ncomp not in (1, 3):
                raise JpegError(f"unsupported component count {ncomp}")
            for c in range(ncomp):
                cid, hv, tq = segment[6 + 3 * c], segment[7 + 3 * c], segment[8 + 3 * c]
                components.append(_Component(cid, hv >> 4, hv & 0x0F, tq))
        elif marker in (0xC1, 0xC2, 0xC3, 0xC5, 0xC6, 0xC7, 0xC9, 0xCA, 0xCB, 0xCD, 0xCE, 0xCF):
            raise JpegError("only baseline sequential JPEG is supported")
        elif marker == 0xC4:  # DHT
            i = 0
            while i < len(segment):
                tc, th = segment[i] >> 4, segment[i] & 0x0F
                counts = list(segment[i + 1 : i + 17])
                total = sum(counts)
                symbols = bytes(segment[i + 17 : i + 17 + total])
                table = _HuffTable(counts, symbols)
                if tc == 0:
                    dc_tables[th] = table
                else:
                    ac_tables[th] = table
                i += 17 + total
        elif marker == 0xDD:  # DRI
            restart_interval = (segment[0] << 8) | segment[1]
        elif marker == 0xDA:  # SOS
            ns = segment[0]
            comp_by_id = {c.comp_id: c for c in components}
            scan_order: list[_Component] = []
            for s in range(ns):
                cid = segment[1 + 2 * s]
                tables = segment[2 + 2 * s]
                comp = comp_by_id.get(cid)
                if comp is None:
                    raise JpegError(f"scan references unknown component {cid}")
                comp.dc_table = tables >> 4
                comp.ac_table = tables & 0x0F
                scan_order.append(comp)
            pos += length
            return _decode_scan(
                data, pos, width, height, scan_order, qtables, dc_tables, ac_tables,
                restart_interval, idct,
            )
        pos += length
    raise JpegError("no scan data found")


def _decode_scan(
    data: bytes,
    pos: int,
    width: int,
    height: int,
    components: list[_Component],
    qtables: dict[int, np.ndarray],
    dc_tables: dict[int, _HuffTable],
    ac_tables: dict[int, _HuffTable],
    restart_interval: int,
    idct,
) -> np.ndarray:
    if not width or not height:
        raise JpegError("missing frame header")
    hmax = max(c.h for c in components)
    vmax = max(c.v for c in components)
    if len(components) == 1:
        # Non-interleaved scan: one 8x8 block per MCU, sampling ignored.
        hmax = vmax = components[0].h = components[0].v = 1
    mcu_w, mcu_h = 8 * hmax, 8 * vmax
    mcus_x = (width + mcu_w - 1) // mcu_w
    mcus_y = (height + mcu_h - 1) // mcu_h

    for comp in components:
        comp.planes = np.zeros((mcus_y * comp.v * 8, mcus_x * comp.h * 8), dtype=np.float64)
        comp.predictor = 0

    reader = _BitReader(data, pos)
    mcu_index = 0
    for my in range(mcus_y):
        for mx in range(mcus_x):
            if restart_interval and mcu_index and mcu_index % restart_interval == 0:
                marker = reader.align_to_marker()
                if not 0xD0 <= marker <= 0xD7:
                    raise JpegError(f"expected RST marker, got 0xFF{marker:02X}")
                for comp in components:
                    comp.predictor = 0
            mcu_index += 1
            for comp in components:
                for by in range(comp.v):
                    for bx in range(comp.h):
                        block = _decode_block(reader, comp, qtables, dc_tables, ac_tables)
                        spatial = idct(block)
                        y0 = (my * comp.v + by) * 8
                        x0 = (mx * comp.h + bx) * 8
                        comp.planes[y0 : y0 + 8, x0 : x0 + 8] = spatial

    planes = []
    for comp in components:
        plane = comp.planes
        # Box (pixel replication) upsampling to full resolution.
        if comp.h != hmax or comp.v != vmax:
            plane = np.repeat(np.repeat(plane, vmax // comp.v, axis=0), hmax // comp.h, axis=1)
        planes.append(plane[:height, :width])

    if len(planes) == 1:
        gray = planes[0]
        rgb = np.stack([gray, gray, gray], axis=-1)
        return np.clip(np.floor(rgb + 0.5), 0, 255).astype(np.uint8)

    y, cb, cr = planes
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    rgb = np.stack([r, g, b], axis=-1)
    rounded = np.floor(np.abs(rgb) + 0.5) * np.sign(rgb)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def _decode_block(
    reader: _BitReader,
    comp: _Component,
    qtables: dict[int, np.ndarray],
    dc_tables: dict[int, _HuffTable],
    ac_tables: dict[int, _HuffTable],
) -> np.ndarray:
    try:
        qtable = qtables[comp.tq]
        dc_table = dc_tables[comp.dc_table]
        ac_table = ac_tables[comp.ac_table]
    except KeyError as exc:
        raise JpegError(f"missing table {exc}") from exc

    coeffs = np.zeros(64, dtype=np.int64)
    t = dc_table.decode(reader)
    diff = _extend(reader.receive(t), t)
    comp.predictor += diff
    coeffs[0] = comp.predictor

    k = 1
    while k < 64:
        rs = ac_table.decode(reader)
        run, size = rs >> 4, rs & 0x0F
        if size == 0:
            if run == 15:  # ZRL
                k += 16
                continue
            break  # EOB
        k += run
        if k > 63:
            raise JpegError("AC coefficient index out of range")
        coeffs[k] = _extend(reader.receive(size), size)
        k += 1

    dequant = coeffs * qtable
    block = np.zeros(64, dtype=np.int64)
    block[ZIGZAG] = dequant
    return block.reshape(8, 8)
