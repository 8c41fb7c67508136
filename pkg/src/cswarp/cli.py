"""Command-line interface.

Exit codes: 0 success, 1 usage/contract/domain errors, 2 I/O errors.
Diagnostics go to stderr; data goes to files or stdout. Output files are
written atomically (temp file + rename), so no partial output survives a
failure. Every command is deterministic given its flags and --seed.
"""

import json
import os
import sys
import tempfile

import click
import numpy as np

from . import config as cfgmod
from . import registration as reg
from .errors import ContractError, CswarpError, DomainError, ImageIOError
from .imageops import (
    backward_warp,
    composite,
    l1_distance,
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
)
from .solver import evaluate_field


def _write_text(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cswarp-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ImageIOError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ContractError(f"{path}: invalid JSON: {err}") from err


@click.group()
def cli():
    """Non-rigid image warping and registration with TPS and Wendland RBFs."""


@cli.group()
def kernel():
    """Kernel inspection utilities."""


@kernel.command("profile")
@click.option("--family", type=click.Choice(["tps", "wendland31"]), required=True)
@click.option("--alpha", type=float, default=1.0, show_default=True,
              help="Support radius (wendland31 only).")
@click.option("--rmax", type=float, required=True, help="Largest radius to sample.")
@click.option("--steps", type=int, required=True, help="Number of CSV rows.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output CSV path (stdout when omitted).")
def kernel_profile(family, alpha, rmax, steps, out):
    """Emit r,value,dvalue_dr[,dvalue_dalpha] rows for one kernel."""
    if steps < 1:
        raise DomainError("--steps must be at least 1")
    if rmax < 0:
        raise DomainError("--rmax must be nonnegative")
    rs = np.linspace(0.0, rmax, steps)
    fam = KernelFamily(family)
    spec = KernelSpec(fam, alpha)
    if fam is KernelFamily.WENDLAND31:
        rows = ["r,value,dvalue_dr,dvalue_dalpha"]
        for r in map(float, rs):
            rows.append(
                f"{r!r},{eval_wendland31(r, alpha)!r},"
                f"{kernel_dr(spec, r)!r},{kernel_dalpha(r, alpha)!r}"
            )
    else:
        rows = ["r,value,dvalue_dr"]
        for r in map(float, rs):
            rows.append(f"{r!r},{eval_tps(r)!r},{kernel_dr(spec, r)!r}")
    text = "\n".join(rows) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        _write_text(out, text)


@cli.command("warp")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.argument("in_png", type=click.Path(dir_okay=False))
@click.argument("out_png", type=click.Path(dir_okay=False))
@click.option("--field", "field_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the sampling field in DFIELD format.")
@click.option("--border", type=click.Choice(["clamp", "zeros"]), default="clamp",
              show_default=True)
def cmd_warp(config_path, in_png, out_png, field_path, border):
    """Warp IN_PNG under the JSON configuration and write OUT_PNG."""
    doc = _read_json(config_path)
    model, grid, frame = cfgmod.build_from_config(doc)
    image = load_png(in_png)
    if (image.width, image.height) != (frame.width, frame.height):
        raise ContractError(
            f"image is {image.width}x{image.height} but config frame is "
            f"{frame.width}x{frame.height}"
        )
    field = evaluate_field(model, frame)
    save_png(backward_warp(image, field, border=border), out_png)
    if field_path is not None:
        save_dfield(field, field_path)


def _register_options(fn):
    opts = [
        click.option("--rows", type=int, default=5, show_default=True),
        click.option("--cols", type=int, default=5, show_default=True),
        click.option("--family", type=click.Choice(["tps", "wendland31"]),
                     default="wendland31", show_default=True),
        click.option("--iterations", type=int, default=200, show_default=True,
                     help="Iterations per pyramid level."),
        click.option("--step-size", type=float, default=0.05, show_default=True),
        click.option("--levels", type=int, default=3, show_default=True),
        click.option("--alpha-hat", type=float, default=0.3, show_default=True,
                     help="Initial normalized support parameter in (0, 1)."),
        click.option("--lambda-alpha", type=float, default=6.0, show_default=True),
        click.option("--optimize-alpha/--no-optimize-alpha", default=True,
                     show_default=True),
        click.option("--charbonnier-eps", type=float, default=1e-3, show_default=True),
        click.option("--lambda-reg", type=float, default=0.0, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _make_config(rows, cols, family, iterations, step_size, levels, alpha_hat,
                 lambda_alpha, optimize_alpha, charbonnier_eps, lambda_reg, seed):
    return reg.RegistrationConfig(
        rows=rows,
        cols=cols,
        family=KernelFamily(family),
        optimize_alpha=optimize_alpha,
        lambda_alpha=lambda_alpha,
        alpha_hat0=alpha_hat,
        iterations=iterations,
        step_size=step_size,
        levels=levels,
        charbonnier_eps=charbonnier_eps,
        lambda_reg=lambda_reg,
        seed=seed,
    )


@cli.command("register")
@click.argument("source_png", type=click.Path(dir_okay=False))
@click.argument("target_png", type=click.Path(dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True,
              help="Directory for result.json, warped.png, and curve.csv.")
@_register_options
def cmd_register(source_png, target_png, out_dir, **flags):
    """Register SOURCE_PNG onto TARGET_PNG by gradient descent."""
    cfg = _make_config(**flags)
    source = load_png(source_png)
    target = load_png(target_png)
    result = reg.register(source, target, cfg)
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "result.json"), _dump_json(result.to_dict()))
    _write_text(os.path.join(out_dir, "curve.csv"), result.loss_curve_csv())
    save_png(result.warped, os.path.join(out_dir, "warped.png"))
    click.echo(
        f"l1={result.l1:.6f} ssim={result.ssim:.6f} alpha={result.alpha:.6f}",
        err=True,
    )


@cli.command("synth")
@click.option("--width", type=int, default=96, show_default=True)
@click.option("--height", type=int, default=128, show_default=True)
@click.option("--pattern", type=click.Choice(["checker", "checker+blob"]),
              default="checker+blob", show_default=True)
@click.option("--rows", type=int, default=5, show_default=True)
@click.option("--cols", type=int, default=5, show_default=True)
@click.option("--alpha-hat", type=float, default=0.3, show_default=True)
@click.option("--lambda-alpha", type=float, default=6.0, show_default=True)
@click.option("--theta-scale", type=float, default=0.1, show_default=True,
              help="Uniform range of the random ground-truth offsets.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True,
              help="Directory for source.png, target.png, and truth.json.")
def cmd_synth(width, height, pattern, rows, cols, alpha_hat, lambda_alpha,
              theta_scale, seed, out_dir):
    """Generate a synthetic source/target pair with known warp parameters."""
    source, target, truth = reg.make_synthetic_pair(
        width,
        height,
        pattern=pattern,
        alpha_hat_star=alpha_hat,
        seed=seed,
        rows=rows,
        cols=cols,
        lambda_alpha=lambda_alpha,
        theta_scale=theta_scale,
    )
    os.makedirs(out_dir, exist_ok=True)
    save_png(source, os.path.join(out_dir, "source.png"))
    save_png(target, os.path.join(out_dir, "target.png"))
    _write_text(os.path.join(out_dir, "truth.json"), _dump_json(truth))


@cli.command("composite")
@click.argument("mask_png", type=click.Path(dir_okay=False))
@click.argument("warped_png", type=click.Path(dir_okay=False))
@click.argument("render_png", type=click.Path(dir_okay=False))
@click.argument("out_png", type=click.Path(dir_okay=False))
def cmd_composite(mask_png, warped_png, render_png, out_png):
    """Fuse warped and rendered images through a grayscale mask."""
    mask = load_mask(mask_png)
    warped = load_png(warped_png)
    render = load_png(render_png)
    save_png(composite(mask, warped, render), out_png)


@cli.command("metrics")
@click.argument("a_png", type=click.Path(dir_okay=False))
@click.argument("b_png", type=click.Path(dir_okay=False))
def cmd_metrics(a_png, b_png):
    """Print {"l1": ..., "ssim": ...} for two images of equal size."""
    a = load_png(a_png)
    b = load_png(b_png)
    click.echo(_dump_json({"l1": l1_distance(a, b), "ssim": ssim(a, b)}), nl=False)


@cli.command("compare")
@click.argument("source_png", type=click.Path(dir_okay=False))
@click.argument("target_png", type=click.Path(dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=".",
              show_default=True,
              help="Directory for report.json and warped_<kernel>.png files.")
@_register_options
def cmd_compare(source_png, target_png, out_dir, **flags):
    """Register with both kernels and report metrics plus locality statistics."""
    cfg = _make_config(**flags)
    source = load_png(source_png)
    target = load_png(target_png)
    report, results = reg.compare_kernels(source, target, cfg)
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, "report.json"), _dump_json(report))
    for family, res in results.items():
        save_png(res.warped, os.path.join(out_dir, f"warped_{family.value}.png"))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as err:
        sys.exit(err.exit_code)
    except click.Abort:
        sys.exit(1)
    except click.UsageError as err:
        click.echo(f"error: {err.format_message()}", err=True)
        sys.exit(1)
    except ImageIOError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(2)
    except CswarpError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()
