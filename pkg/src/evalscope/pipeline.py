"""Bit-exact execution of a manifest's ordered pre-processing steps.

Every operation here has one frozen, documented semantics, because the
whole point of the runtime is that two runs of the same manifest produce
the same tensor, bit for bit:

* ``center_crop`` — output size ``floor(dim * pct / 100)`` per axis,
  window offset ``floor((dim - out) / 2)``, pixels copied verbatim.
* ``resize_bilinear`` — half-pixel-center source mapping
  ``src = (dst + 0.5) * in/out - 0.5`` (clamped), 4-tap interpolation
  evaluated in float32 as ``top = p00 + (p01-p00)*wx`` / ``bottom = p10 +
  (p11-p10)*wx`` / ``value = top + (bottom-top)*wy``; uint8 results round
  half away from zero. ``keep_aspect_ratio`` scales so the target is
  covered, then center-crops to the requested size.
* ``normalize_and_cast`` — two policies that deliberately disagree:
  ``convert_then_normalize`` computes ``(float32(x) - mean) / rescale``
  in float32 with mean/rescale in byte units; the legacy
  ``normalize_in_bytes_then_convert`` rounds mean/rescale to integers
  (half away from zero), subtracts and divides in integer arithmetic with
  truncation toward zero, and only then converts to float.

Steps run strictly in manifest order and are never reordered; the engine
records the executed step sequence (after any per-request parameter
overrides) as provenance attached to the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .decoders import DecodeInfo, decode_rgb
from .manifest import (
    CastStep,
    CropStep,
    DecodeStep,
    InputSpec,
    MeanStep,
    ProcessingStep,
    RescaleStep,
    ResizeStep,
)


class PipelineError(ValueError):
    pass


@dataclass
class ImageBuffer:
    """Decoded pixels: (H, W, C) array with explicit element type and color layout."""

    width: int
    height: int
    channels: int
    element_type: str  # uint8 | int32 | float32
    color_layout: str  # RGB | BGR
    data: np.ndarray

    @classmethod
    def from_array(cls, data: np.ndarray, color_layout: str, element_type: str | None = None) -> "ImageBuffer":
        if data.ndim != 3:
            raise PipelineError(f"image array must be (H, W, C), got shape {data.shape}")
        h, w, c = data.shape
        if element_type is None:
            element_type = {np.uint8: "uint8", np.float32: "float32", np.int32: "int32"}.get(
                data.dtype.type
            )
            if element_type is None:
                raise PipelineError(f"unsupported image dtype {data.dtype}")
        return cls(w, h, c, element_type, color_layout, data)


@dataclass
class Tensor:
    """N-dimensional value with explicit batch data layout."""

    dims: tuple[int, ...]
    data_layout: str  # NHWC | NCHW
    element_type: str
    data: np.ndarray

    def equals(self, other: "Tensor") -> bool:
        return (
            self.dims == other.dims
            and self.data_layout == other.data_layout
            and self.element_type == other.element_type
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True)
class NormalizationParams:
    mean: tuple[float, ...]
    rescale: float
    order_policy: str = "convert_then_normalize"


@dataclass
class PipelineProvenance:
    """The executed step sequence with parameters, JSON-serializable."""

    steps: list[dict[str, Any]] = field(default_factory=list)
    decode: DecodeInfo | None = None
    overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def to_json_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "steps": self.steps,
            "overrides": self.overrides,
        }
        if self.decode is not None:
            obj["decode"] = self.decode.to_json_obj()
        return obj


def _round_half_away(values: np.ndarray) -> np.ndarray:
    return np.floor(np.abs(values) + 0.5) * np.sign(values)


def _round_half_away_scalar(value: float) -> int:
    import math

    return int(math.floor(abs(value) + 0.5) * (1 if value >= 0 else -1))


# ---------------------------------------------------------------------------
# Operations


def decode_image(
    data: bytes,
    opts: DecodeStep | None = None,
    jpeg_decoder: str | None = None,
) -> tuple[ImageBuffer, DecodeInfo]:
    """Decode bytes into an ImageBuffer in the requested color layout."""
    opts = opts or DecodeStep()
    pixels, info = decode_rgb(
        data,
        dct_method=opts.dct_method,
        jpeg_decoder=jpeg_decoder or "builtin",
    )
    img = ImageBuffer.from_array(pixels, "RGB", "uint8")
    return convert_color_layout(img, opts.color_layout), info


def convert_color_layout(img: ImageBuffer, target: str) -> ImageBuffer:
    """Reverse channel order iff target differs; identity otherwise."""
    if img.channels != 3:
        raise PipelineError(f"color layout conversion requires 3 channels, got {img.channels}")
    if target == img.color_layout:
        return img
    return replace(img, color_layout=target, data=img.data[:, :, ::-1].copy())


def center_crop(img: ImageBuffer, percentage: float) -> ImageBuffer:
    """Keep the centered fraction of each spatial axis; pixels copied verbatim."""
    if not 0 < percentage <= 100:
        raise PipelineError(f"crop percentage must be in (0, 100], got {percentage}")
    out_h = int(np.floor(img.height * percentage / 100.0))
    out_w = int(np.floor(img.width * percentage / 100.0))
    if out_h == 0 or out_w == 0:
        raise PipelineError(
            f"crop of {percentage}% on {img.height}x{img.width} yields a degenerate image"
        )
    top = (img.height - out_h) // 2
    left = (img.width - out_w) // 2
    data = img.data[top : top + out_h, left : left + out_w].copy()
    return replace(img, height=out_h, width=out_w, data=data)


def _crop_window(img: ImageBuffer, out_h: int, out_w: int) -> ImageBuffer:
    top = (img.height - out_h) // 2
    left = (img.width - out_w) // 2
    data = img.data[top : top + out_h, left : left + out_w].copy()
    return replace(img, height=out_h, width=out_w, data=data)


def resize_bilinear(
    img: ImageBuffer, out_h: int, out_w: int, keep_aspect_ratio: bool = False
) -> ImageBuffer:
    """Half-pixel-center bilinear resize; see module docstring for the exact math."""
    if out_h < 1 or out_w < 1:
        raise PipelineError("resize dimensions must be >= 1")
    if img.element_type not in ("uint8", "float32"):
        raise PipelineError(f"cannot resize a buffer of element type {img.element_type}")
    if keep_aspect_ratio and (img.height, img.width) != (out_h, out_w):
        scale = max(out_h / img.height, out_w / img.width)
        mid_h = max(out_h, _round_half_away_scalar(img.height * scale))
        mid_w = max(out_w, _round_half_away_scalar(img.width * scale))
        scaled = resize_bilinear(img, mid_h, mid_w, keep_aspect_ratio=False)
        return _crop_window(scaled, out_h, out_w)
    if (img.height, img.width) == (out_h, out_w):
        return img

    src = img.data.astype(np.float32)
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (img.height / out_h) - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (img.width / out_w) - 0.5
    ys = np.clip(ys, 0.0, img.height - 1)
    xs = np.clip(xs, 0.0, img.width - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, img.height - 1)
    x1 = np.minimum(x0 + 1, img.width - 1)
    wy = (ys - y0).astype(np.float32)[:, None, None]
    wx = (xs - x0).astype(np.float32)[None, :, None]

    p00 = src[y0[:, None], x0[None, :]]
    p01 = src[y0[:, None], x1[None, :]]
    p10 = src[y1[:, None], x0[None, :]]
    p11 = src[y1[:, None], x1[None, :]]
    top = p00 + (p01 - p00) * wx
    bottom = p10 + (p11 - p10) * wx
    values = top + (bottom - top) * wy

    if img.element_type == "uint8":
        data = _round_half_away(values).astype(np.uint8)
    else:
        data = values.astype(np.float32)
    return replace(img, height=out_h, width=out_w, data=data)


def normalize_and_cast(img: ImageBuffer, params: NormalizationParams) -> ImageBuffer:
    """Apply mean/rescale normalization under the chosen order policy."""
    if params.rescale == 0:
        raise PipelineError("rescale must be non-zero")
    if len(params.mean) not in (1, img.channels):
        raise PipelineError(
            f"mean must have 1 or {img.channels} entries, got {len(params.mean)}"
        )
    if img.element_type != "uint8":
        raise PipelineError("normalize_and_cast expects a uint8 buffer")
    mean = np.array(params.mean, dtype=np.float64)
    if params.order_policy == "convert_then_normalize":
        data = (img.data.astype(np.float32) - mean.astype(np.float32)) / np.float32(params.rescale)
        return replace(img, element_type="float32", data=data.astype(np.float32))
    if params.order_policy == "normalize_in_bytes_then_convert":
        mean_int = np.array([_round_half_away_scalar(m) for m in mean], dtype=np.int32)
        rescale_int = _round_half_away_scalar(params.rescale)
        if rescale_int == 0:
            raise PipelineError(f"rescale {params.rescale} rounds to zero in byte-domain mode")
        diff = img.data.astype(np.int32) - mean_int
        quotient = _trunc_div(diff, rescale_int)
        return replace(img, element_type="float32", data=quotient.astype(np.float32))
    raise PipelineError(f"unknown order policy {params.order_policy!r}")


def _trunc_div(values: np.ndarray, divisor: int) -> np.ndarray:
    # C-style integer division: truncation toward zero.
    sign = np.sign(values) * (1 if divisor > 0 else -1)
    return sign * (np.abs(values) // abs(divisor))


def to_layout(tensor: Tensor, target: str) -> Tensor:
    """Physically transpose a 4-D tensor between NHWC and NCHW."""
    if target not in ("NHWC", "NCHW"):
        raise PipelineError(f"unknown data layout {target!r}")
    if len(tensor.dims) != 4:
        raise PipelineError(f"layout conversion requires a 4-D tensor, got {len(tensor.dims)}-D")
    if tensor.data_layout == target:
        return tensor
    axes = (0, 3, 1, 2) if target == "NCHW" else (0, 2, 3, 1)
    data = np.ascontiguousarray(np.transpose(tensor.data, axes))
    return Tensor(tuple(data.shape), target, tensor.element_type, data)


# ---------------------------------------------------------------------------
# Pipeline execution


def apply_step_overrides(
    steps: tuple[ProcessingStep, ...], overrides: dict[str, dict[str, Any]]
) -> tuple[ProcessingStep, ...]:
    """Merge per-request parameter overrides onto steps, keyed by step kind.

    Overrides replace named parameters of existing steps only; they can
    never introduce or reorder steps (reordering requires editing the
    manifest).
    """
    if not overrides:
        return steps
    kinds = [s.kind for s in steps]
    for kind in overrides:
        if kind not in kinds:
            raise PipelineError(f"override targets step {kind!r} which is not in the pipeline")
    merged: list[ProcessingStep] = []
    for step in steps:
        params = overrides.get(step.kind)
        if params:
            try:
                step = replace(step, **params)
            except TypeError as exc:
                raise PipelineError(f"invalid override for step {step.kind!r}: {exc}") from exc
            _check_step_enums(step)
        merged.append(step)
    return tuple(merged)


_STEP_ENUMS: dict[str, dict[str, tuple[str, ...]]] = {
    "decode": {
        "element_type": ("int8", "uint8"),
        "data_layout": ("NHWC", "NCHW"),
        "color_layout": ("RGB", "BGR"),
        "dct_method": ("integer_fast", "integer_accurate"),
    },
    "crop": {"method": ("center",)},
    "resize": {"method": ("bilinear",)},
    "cast": {
        "element_type": ("int8", "uint8", "float32"),
        "order_policy": ("convert_then_normalize", "normalize_in_bytes_then_convert"),
    },
}


def _check_step_enums(step: ProcessingStep) -> None:
    for field_name, allowed in _STEP_ENUMS.get(step.kind, {}).items():
        value = getattr(step, field_name)
        if value not in allowed:
            raise PipelineError(
                f"invalid {field_name} {value!r} for step {step.kind!r} "
                f"(expected one of {', '.join(allowed)})"
            )


def effective_steps(
    spec: InputSpec, overrides: dict[str, dict[str, Any]] | None = None
) -> tuple[ProcessingStep, ...]:
    """The steps that will actually run: implicit decode materialized, overrides merged."""
    steps = spec.processing
    if not steps or steps[0].kind != "decode":
        layout_attr = str(spec.attributes.get("layout", "HWC"))
        data_layout = "NCHW" if layout_attr in ("CHW", "NCHW") else "NHWC"
        color_layout = str(spec.attributes.get("color_layout", "RGB"))
        if color_layout not in ("RGB", "BGR"):
            raise PipelineError(f"unsupported color layout attribute {color_layout!r}")
        implicit = DecodeStep(
            element_type=spec.element_type if spec.element_type in ("uint8", "int8") else "uint8",
            data_layout=data_layout,
            color_layout=color_layout,
        )
        steps = (implicit,) + steps
    return apply_step_overrides(steps, overrides or {})


def run_pipeline(
    spec: InputSpec,
    raw: bytes,
    overrides: dict[str, dict[str, Any]] | None = None,
    jpeg_decoder: str | None = None,
) -> tuple[Tensor, PipelineProvenance]:
    """Execute the input's steps strictly in order on raw image bytes.

    Returns the batch-of-one tensor plus the provenance record. Errors
    from any step are annotated with the step index.
    """
    steps = effective_steps(spec, overrides)
    provenance = PipelineProvenance(overrides=dict(overrides or {}))

    img: ImageBuffer | None = None
    batch_layout = "NHWC"
    byte_mode = False
    pending_cast: CastStep | None = None

    for index, step in enumerate(steps):
        try:
            if isinstance(step, DecodeStep):
                if index != 0:
                    raise PipelineError("decode must be the first step")
                img, info = decode_image(raw, step, jpeg_decoder)
                provenance.decode = info
                batch_layout = step.data_layout
            elif img is None:
                raise PipelineError("pipeline has no decoded image")
            elif isinstance(step, CropStep):
                img = center_crop(img, step.percentage)
            elif isinstance(step, ResizeStep):
                _, out_h, out_w = step.dimensions
                img = resize_bilinear(img, out_h, out_w, step.keep_aspect_ratio)
            elif isinstance(step, CastStep):
                if step.order_policy == "normalize_in_bytes_then_convert":
                    if img.element_type != "uint8":
                        raise PipelineError("byte-domain cast requires a uint8 buffer")
                    byte_mode = True
                    pending_cast = step
                else:
                    target = np.float32 if step.element_type == "float32" else np.uint8
                    img = replace(
                        img,
                        element_type=step.element_type if step.element_type != "int8" else "uint8",
                        data=img.data.astype(target),
                    )
            elif isinstance(step, MeanStep):
                mean = np.array(step.values, dtype=np.float64)
                if len(step.values) not in (1, img.channels):
                    raise PipelineError(
                        f"mean must have 1 or {img.channels} entries, got {len(step.values)}"
                    )
                if byte_mode:
                    mean_int = np.array(
                        [_round_half_away_scalar(m) for m in mean], dtype=np.int32
                    )
                    img = replace(
                        img, element_type="int32", data=img.data.astype(np.int32) - mean_int
                    )
                else:
                    data = img.data.astype(np.float32) - mean.astype(np.float32)
                    img = replace(img, element_type="float32", data=data)
            elif isinstance(step, RescaleStep):
                if step.value == 0:
                    raise PipelineError("rescale must be non-zero")
                if byte_mode:
                    rescale_int = _round_half_away_scalar(step.value)
                    if rescale_int == 0:
                        raise PipelineError(
                            f"rescale {step.value} rounds to zero in byte-domain mode"
                        )
                    img = replace(
                        img,
                        element_type="int32",
                        data=_trunc_div(img.data.astype(np.int32), rescale_int),
                    )
                else:
                    data = img.data.astype(np.float32) / np.float32(step.value)
                    img = replace(img, element_type="float32", data=data)
            else:
                raise PipelineError(f"unsupported step kind {step.kind!r}")
        except (PipelineError, ValueError) as exc:
            raise PipelineError(f"step {index} ({step.kind}): {exc}") from exc
        provenance.steps.append({"kind": step.kind, **step.params()})

    if img is None:
        raise PipelineError("pipeline produced no image")
    if pending_cast is not None:
        target_type = pending_cast.element_type if pending_cast.element_type != "int8" else "uint8"
        dtype = np.float32 if target_type == "float32" else np.uint8
        img = replace(img, element_type=target_type, data=img.data.astype(dtype))
    elif img.element_type == "int32":
        img = replace(img, element_type="float32", data=img.data.astype(np.float32))

    data = img.data[None, ...]  # batch of one, NHWC
    tensor = Tensor((1, img.height, img.width, img.channels), "NHWC", img.element_type, data)
    if batch_layout == "NCHW":
        tensor = to_layout(tensor, "NCHW")
    return tensor, provenance
