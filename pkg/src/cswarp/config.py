"""JSON warp-configuration schema and warp-model (de)serialization.

The configuration document fully determines a warp: the control lattice,
the frame, per-point offsets theta (row-major), and the kernel. The
Delaunay-derived lower bound D is always recomputed from the grid, never
read from the file. A serialized model additionally carries the solved
`coeffs` and `affine` blocks; floats round-trip at full precision.
"""

import jsonschema

import numpy as np

from .errors import ContractError
from .grid import Frame, SupportPolicy, check_displacements, clamp_support, make_grid
from .kernels import KernelFamily, KernelSpec
from .solver import WarpModel, fit_interpolant

WARP_CONFIG_SCHEMA = {
    "type": "object",
    "required": ["grid", "frame", "theta", "kernel"],
    "properties": {
        "grid": {
            "type": "object",
            "required": ["rows", "cols"],
            "properties": {
                "rows": {"type": "integer", "minimum": 2},
                "cols": {"type": "integer", "minimum": 2},
            },
        },
        "frame": {
            "type": "object",
            "required": ["width", "height"],
            "properties": {
                "width": {"type": "integer", "minimum": 2},
                "height": {"type": "integer", "minimum": 2},
                "normalized": {"type": "boolean"},
            },
        },
        "theta": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "kernel": {
            "type": "object",
            "required": ["family"],
            "properties": {
                "family": {"type": "string", "enum": ["tps", "wendland31"]},
                "alpha_hat": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "lambda_alpha": {"type": "number", "exclusiveMinimum": 0},
                "with_affine": {"type": "boolean"},
                "lambda_reg": {"type": "number", "minimum": 0},
            },
        },
    },
}


def validate_warp_config(doc):
    try:
        jsonschema.validate(doc, WARP_CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ContractError(f"invalid warp config at {err.json_path}: {err.message}") from err


def _grid_frame_from_config(doc):
    frame = Frame(
        width=doc["frame"]["width"],
        height=doc["frame"]["height"],
        normalized=doc["frame"].get("normalized", True),
    )
    grid = make_grid(doc["grid"]["rows"], doc["grid"]["cols"], frame)
    return grid, frame


def resolve_kernel(doc_kernel, grid):
    """KernelSpec (+ with_affine flag) from the config's kernel block."""
    family = KernelFamily(doc_kernel["family"])
    if family is KernelFamily.TPS:
        return KernelSpec(family), True
    policy = SupportPolicy.for_grid(grid, doc_kernel.get("lambda_alpha", 6.0))
    alpha = clamp_support(doc_kernel.get("alpha_hat", 0.3), policy)
    return KernelSpec(family, alpha), bool(doc_kernel.get("with_affine", False))


def build_from_config(doc):
    """Validate the config and fit the warp model. Returns (model, grid, frame)."""
    validate_warp_config(doc)
    grid, frame = _grid_frame_from_config(doc)
    theta = check_displacements(np.asarray(doc["theta"], dtype=float), grid)
    spec, with_affine = resolve_kernel(doc["kernel"], grid)
    model = fit_interpolant(
        grid.base,
        grid.base + theta,
        spec,
        with_affine=with_affine,
        lambda_reg=doc["kernel"].get("lambda_reg", 0.0),
    )
    return model, grid, frame


def model_to_dict(model, grid, frame, theta, kernel_block):
    """Serialize a solved model together with its generating configuration."""
    return {
        "grid": {"rows": grid.rows, "cols": grid.cols},
        "frame": {
            "width": frame.width,
            "height": frame.height,
            "normalized": frame.normalized,
        },
        "theta": [[float(x), float(y)] for x, y in np.asarray(theta)],
        "kernel": dict(kernel_block),
        "coeffs": [[float(x), float(y)] for x, y in model.coeffs],
        "affine": None
        if model.affine is None
        else [[float(v) for v in row] for row in model.affine],
        "lambda_reg": float(model.lambda_reg),
    }


def model_from_dict(doc):
    """Rebuild a WarpModel from its serialized form. Returns (model, grid, frame)."""
    validate_warp_config(doc)
    grid, frame = _grid_frame_from_config(doc)
    spec, _ = resolve_kernel(doc["kernel"], grid)
    model = WarpModel(
        kernel=spec,
        centers=grid.base,
        coeffs=np.asarray(doc["coeffs"], dtype=float),
        affine=None if doc.get("affine") is None else np.asarray(doc["affine"], dtype=float),
        lambda_reg=float(doc.get("lambda_reg", 0.0)),
    )
    if model.coeffs.shape != (grid.n_points, 2):
        raise ContractError(
            f"coeffs must have shape ({grid.n_points}, 2), got {model.coeffs.shape}"
        )
    return model, grid, frame
