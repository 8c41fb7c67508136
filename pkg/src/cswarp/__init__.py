"""Non-rigid 2D image warping and registration with TPS and compactly
supported (Wendland) radial basis functions."""

from .backend import BACKEND
from .grid import (
    ControlGrid,
    Frame,
    SupportPolicy,
    clamp_support,
    delaunay_max_edge,
    grid_distance_d,
    make_grid,
)
from .imageops import (
    DisplacementField,
    ImageBuffer,
    Mask,
    backward_warp,
    bilinear_sample,
    composite,
    l1_distance,
    load_dfield,
    load_mask,
    load_png,
    save_dfield,
    save_png,
    ssim,
)
from .kernels import (
    KernelFamily,
    KernelSpec,
    eval_tps,
    eval_wendland31,
    kernel_dalpha,
    kernel_dr,
    kernel_eval,
    wendland_via_integral,
)
from .registration import (
    RegistrationConfig,
    RegistrationResult,
    compare_kernels,
    loss_and_grad,
    make_synthetic_pair,
    register,
)
from .solver import (
    WarpModel,
    bending_energy,
    evaluate_field,
    evaluate_point,
    evaluate_points,
    field_jacobians,
    fit_interpolant,
)

__version__ = "0.1.0"
