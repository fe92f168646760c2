"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 I/O, 4 format/parse, 5 numeric
(degenerate input).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import codec, metrics
from .container import load_model, save_model
from .distill import DistillConfig, StudentSpec, train_students
from .errors import (
    ConfigError,
    DegenerateInputError,
    EmRestoreError,
    NotFoundError,
    ParseError,
    SizeError,
)
from .imageio import RAW_SUFFIXES, read_image, write_image
from .models import AutoencoderParams, KernelModel, MlpModel, kernel_apply, mlp_denoise
from .preprocess import denormalize, normalize
from .published import KERNEL_SIZES, Modality, get_kernel, kernel_by_name, published_kernels
from .training import Schedule, TrainConfig, train_autoencoder

log = logging.getLogger("emrestore")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PARSE, EXIT_NUMERIC = 0, 2, 3, 4, 5

IMAGE_SUFFIXES = (".pgm",) + RAW_SUFFIXES


class UsageError(EmRestoreError):
    pass


# --------------------------------------------------------------------------- helpers


def _load_any_model(ref: str):
    """A ``.emnn`` path or a published kernel short name such as ``tem-k3``."""
    path = Path(ref)
    if path.suffix == ".emnn" or path.exists():
        return load_model(path)
    kernel = kernel_by_name(ref)
    return KernelModel(kernel.weights), kernel.modality


def restore_image(model, img, border: str = "reflect") -> np.ndarray:
    """Normalize, apply ``model``, and map back to the input intensity scale."""
    if isinstance(model, AutoencoderParams):
        return codec.decompress(model, codec.compress(model, img, allow_degenerate=True))
    norm, stats = normalize(img, allow_degenerate=True)
    if isinstance(model, KernelModel):
        out = kernel_apply(model, norm, border)
    elif isinstance(model, MlpModel):
        out = mlp_denoise(model, norm, border)
    else:
        raise UsageError(f"cannot denoise with {type(model).__name__}")
    return denormalize(out, stats)


def _image_dir(path: str, width, height) -> list[np.ndarray]:
    root = Path(path)
    if root.is_file():
        files = [root]
    else:
        if not root.is_dir():
            raise FileNotFoundError(f"no such file or directory: {root}")
        files = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise UsageError(f"no .pgm or raw images found in {root}")
    return [read_image(p, width, height) for p in files]


def _channels(text: str) -> tuple[int, int, int]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated integers, got {text!r}") from None
    if len(values) != 3 or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected three positive integers, got {text!r}")
    return values


# --------------------------------------------------------------------------- subcommands


def cmd_denoise(args) -> int:
    model, _ = _load_any_model(args.model)
    img = read_image(args.input, args.width, args.height)
    write_image(args.out, restore_image(model, img, args.border))
    return EXIT_OK


def cmd_train_autoencoder(args) -> int:
    images = _image_dir(args.input, args.width, args.height)
    config = TrainConfig(batch_size=args.batch, max_iter=args.iters, seed=args.seed, latent_depth=args.latent_depth,
                         channels=args.channels, crop_size=args.crop_size, noise=args.noise)
    step = args.step_every or min(5000, args.iters)
    schedule = Schedule(args.iters, args.eta0, step)
    result = train_autoencoder(config, schedule, images)
    modality = Modality.parse(args.modality)
    save_model(args.out, result.params, modality)
    metrics.write_curve(args.curve or f"{args.out}.curve.csv", result.mse)
    return EXIT_OK


def cmd_distill(args) -> int:
    teacher, modality = _load_any_model(args.model)
    if isinstance(teacher, MlpModel):
        raise UsageError("the teacher must be an autoencoder or a kernel")
    images = _image_dir(args.input, args.width, args.height)
    specs = [StudentSpec.parse(s) for s in args.students.split(",")]
    config = DistillConfig(specs, max_iter=args.iters, crop_size=args.crop_size, eta0=args.eta0,
                           batch_size=args.batch, seed=args.seed)
    result = train_students(config, teacher, images)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for spec, student, curve in zip(result.specs, result.students, result.curves):
        save_model(out / f"{spec.name}.emnn", student, modality)
        metrics.write_curve(out / f"{spec.name}.curve.csv", curve)
        stats = metrics.tail_stats(curve, min(args.tail, len(curve)))
        summary.append((spec.name, stats.mean, stats.std_dev))
    metrics.write_summary(out / "summary.csv", summary)
    with open(out / "crops.csv", "w") as fh:
        fh.write("iteration,image,top,left\n")
        for it, rec in enumerate(result.crops[0]):
            fh.write(f"{it // config.batch_size},{rec.image},{rec.top},{rec.left}\n")
    return EXIT_OK


def cmd_compress(args) -> int:
    model, modality = load_model(args.model)
    if not isinstance(model, AutoencoderParams):
        raise UsageError(f"{args.model} is not an autoencoder")
    img = read_image(args.input, args.width, args.height)
    container = codec.compress(model, img, modality, allow_degenerate=args.allow_degenerate)
    Path(args.out).write_bytes(codec.serialize(container))
    return EXIT_OK


def cmd_decompress(args) -> int:
    model, _ = load_model(args.model)
    if not isinstance(model, AutoencoderParams):
        raise UsageError(f"{args.model} is not an autoencoder")
    container = codec.deserialize(Path(args.input).read_bytes())
    write_image(args.out, codec.decompress(model, container))
    return EXIT_OK


def cmd_kernels(args) -> int:
    if args.size is None and args.out is None:
        for k in published_kernels():
            print(k.name)
        return EXIT_OK
    if args.out is None:
        raise UsageError("--out is required when exporting a kernel")
    modality = Modality.parse(args.modality)
    if args.size is None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for size in KERNEL_SIZES:
            save_model(out / f"{modality.short}-k{size}.emnn", get_kernel(modality, size))
        return EXIT_OK
    save_model(args.out, get_kernel(modality, args.size))
    return EXIT_OK


def cmd_curves(args) -> int:
    _, mse = metrics.read_curve(args.input)
    smooth = metrics.moving_average(mse, args.window)
    if args.out:
        metrics.write_curve(args.out, smooth)
    stats = metrics.tail_stats(mse, min(args.tail, len(mse)))
    print(f"mean {stats.mean:.6f} std_dev {stats.std_dev:.6f}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emrestore", description="Electron micrograph restoration and compression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--config", help="key=value file mirroring long flags; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True, image_out=True):
        if model:
            p.add_argument("--model", required=True)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out", required=image_out)
        p.add_argument("--width", type=int)
        p.add_argument("--height", type=int)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("denoise", help="restore an image with a kernel, MLP or autoencoder")
    common(p)
    p.add_argument("--border", choices=("reflect", "crop"), default="reflect")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("train-autoencoder", help="train a denoising autoencoder on a directory of images")
    common(p, model=False)
    p.add_argument("--iters", type=int, default=60000)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--latent-depth", type=int, default=16)
    p.add_argument("--modality", default="tem")
    p.add_argument("--channels", type=_channels, default=(32, 64, 128))
    p.add_argument("--crop-size", type=int, default=160)
    p.add_argument("--eta0", type=float, default=0.01)
    p.add_argument("--step-every", type=int, default=0, help="default: min(5000, iters)")
    p.add_argument("--noise", choices=("none", "poisson-gaussian"), default="none")
    p.add_argument("--curve", help="learning-curve CSV (default: <out>.curve.csv)")
    p.set_defaults(func=cmd_train_autoencoder)

    p = sub.add_parser("distill", help="fit kernels/MLPs to a frozen teacher")
    common(p)
    p.add_argument("--students", default="k3")
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--crop-size", type=int)
    p.add_argument("--eta0", type=float, default=0.01)
    p.add_argument("--tail", type=int, default=500)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("compress", help="encode an image into a latent container")
    common(p)
    p.add_argument("--allow-degenerate", action="store_true", help="encode constant tiles as zeros")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decode a latent container")
    common(p)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("kernels", help="list or export published kernels")
    p.add_argument("--modality", default="tem")
    p.add_argument("--size", type=int)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("curves", help="smooth a learning curve and summarize its tail")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--window", type=int, default=500)
    p.add_argument("--tail", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_curves)
    return parser


def _apply_config(parser, args, argv) -> None:
    explicit = {a[2:].split("=", 1)[0].replace("-", "_") for a in argv if a.startswith("--")}
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    with open(args.config) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{args.config}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            dest = "input" if key == "in" else key.replace("-", "_")
            if dest in explicit or (key == "in" and "in" in explicit):
                continue
            action = actions.get(dest)
            if action is None:
                raise UsageError(f"{args.config}:{lineno}: unknown option {key!r} for {args.command}")
            if isinstance(action, argparse._StoreTrueAction):
                setattr(args, dest, value.lower() in ("1", "true", "yes"))
            elif action.type is not None:
                try:
                    setattr(args, dest, action.type(value))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"{args.config}:{lineno}: bad value for {key}: {exc}") from None
            else:
                if action.choices and value not in action.choices:
                    raise UsageError(f"{args.config}:{lineno}: {key} must be one of {sorted(action.choices)}")
                setattr(args, dest, value)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.config:
            _apply_config(parser, args, argv)
        return args.func(args)
    except (UsageError, ConfigError, NotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"emrestore: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateInputError as exc:
        print(f"emrestore: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, SizeError) as exc:
        print(f"emrestore: format error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"emrestore: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"emrestore: format error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def main() -> None:
    sys.exit(run())
