"""Command line front end: ``augment``, ``ablate``, ``inspect-attn`` and ``visualize``.

Exit codes: 0 success, 2 bad arguments, 3 unparseable input, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import formats
from .attention import gradient_energy_attention, top_n_cells
from .augment import AugmentConfig, augment_batch
from .errors import FormatError, RangeError, ShapeError
from .extractor import random_weights, tiny_cnn_attention
from .pipeline import attention_source, format_ablation, resize_nearest, run_ablation
from .rng import RngStream
from .tensor import as_image, one_hot
from .visualize import encode_png, heatmap_overlay, render_grid_png

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_IO = 4

_METHODS = {"mixup": "mixup", "cutout": "cutout", "cutmix": "cutmix", "attentive": "attentive_cutmix"}
_PROVIDERS = {"file": "file", "gradient": "gradient_energy", "tinycnn": "tiny_cnn"}
_CLASSES = {"cifar10": 10, "cifar100": 100}


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _common(p: argparse.ArgumentParser, dataset_required: bool = True) -> None:
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--dataset", choices=sorted(_CLASSES), default="cifar10")
    p.add_argument("--in", dest="inputs", nargs="+", metavar="PATH", required=dataset_required)
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("--grid", type=_positive, default=7)
    p.add_argument("--resize", type=_positive, metavar="PIXELS")
    p.add_argument("--provider", choices=sorted(_PROVIDERS), default="gradient")
    p.add_argument("--attn", nargs="+", metavar="PATH",
                   help="ATNG file(s): one shared grid or one per processed image")
    p.add_argument("--weights", metavar="PATH", help="ATNW extractor weights for --provider tinycnn")
    p.add_argument("--batch-size", type=_positive, default=32)
    p.add_argument("--limit", type=_positive, help="process only the first LIMIT records")
    p.add_argument("--workers", type=_positive, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="attentive-cutmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="augment a CIFAR binary dataset into ATNB batches")
    _common(p)
    p.add_argument("--method", choices=sorted(_METHODS), default="attentive")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--alpha", type=float, default=1.0, help="Mixup Beta parameter")
    p.add_argument("--cutout-size", type=int)
    p.add_argument("--apply-prob", type=float, default=1.0)

    p = sub.add_parser("ablate", help="occlusion statistics of Attentive CutMix per patch count")
    _common(p)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=15)

    p = sub.add_parser("inspect-attn", help="print an attention grid and its top cells")
    _common(p, dataset_required=False)
    p.add_argument("--image", metavar="PNG", help="read the image from a PNG file instead of --in")
    p.add_argument("--index", type=int, default=0, help="record index within --in")
    p.add_argument("--top", type=int, default=6)

    p = sub.add_parser("visualize", help="render an ATNB batch as a PNG grid")
    p.add_argument("--batch", metavar="ATNB", required=True)
    p.add_argument("--manifest", metavar="JSON", help="defaults to the batch path with .json")
    p.add_argument("--columns", type=_positive, default=8)
    p.add_argument("--no-outline", action="store_true")
    p.add_argument("--out", metavar="PATH", required=True, help="PNG file or directory")
    return parser


# ----------------------------------------------------------------------------


def _load_records(args):
    records = []
    for path in args.inputs:
        records.extend(formats.read_cifar(path, args.dataset))
    if args.limit is not None:
        records = records[: args.limit]
    if not records:
        raise UsageError("the input dataset holds no records")
    return records


def _prepare_images(records, resize):
    images = [r.image for r in records]
    if resize is not None:
        images = [resize_nearest(x, resize) for x in images]
    return images


def _load_weights(args):
    if args.weights is None:
        return random_weights(args.seed)
    with open(args.weights, "rb") as fh:
        return formats.load_weights_file(fh.read())


def _load_grids(paths):
    grids = []
    for path in paths:
        with open(path, "rb") as fh:
            grids.append(formats.load_attention_file(fh.read()))
    return grids


def _source_for(args, count):
    provider = _PROVIDERS[args.provider]
    if provider == "file":
        if not args.attn:
            raise UsageError("--provider file needs --attn")
        grids = _load_grids(args.attn)
        if len(grids) == 1:
            grids = grids * count
        elif len(grids) != count:
            raise UsageError(f"--attn lists {len(grids)} grids for {count} images")
        return provider, lambda start, stop: attention_source(provider, args.grid, grids=grids[start:stop])
    weights = _load_weights(args) if provider == "tiny_cnn" else None
    src = attention_source(provider, args.grid, weights=weights)
    return provider, lambda start, stop: src


def _config_echo(args, provider, **extra):
    return {
        "dataset": args.dataset,
        "inputs": [os.path.basename(p) for p in args.inputs],
        "grid_size": args.grid,
        "resize": args.resize,
        "provider": provider,
        "batch_size": args.batch_size,
        **extra,
    }


def cmd_augment(args) -> int:
    method = _METHODS[args.method]
    config = AugmentConfig(
        method=method,
        n_patches=args.n,
        grid_size=args.grid,
        mixup_alpha=args.alpha,
        cutout_size=args.cutout_size,
        attention_provider=_PROVIDERS[args.provider],
        apply_prob=args.apply_prob,
    )
    records = _load_records(args)
    images = _prepare_images(records, args.resize)
    classes = _CLASSES[args.dataset]
    labels = [one_hot(r.fine_label, classes) for r in records]
    provider, source_for = _source_for(args, len(images))
    os.makedirs(args.out, exist_ok=True)

    echo = _config_echo(
        args, provider, method=method, n_patches=args.n, mixup_alpha=args.alpha,
        cutout_size=args.cutout_size, apply_prob=args.apply_prob,
    )
    print(json.dumps({"config": echo, "master_seed": args.seed, "records": len(images)}))
    min_batch = 1 if method == "cutout" else 2
    for b, start in enumerate(range(0, len(images), args.batch_size)):
        stop = min(start + args.batch_size, len(images))
        if stop - start < min_batch:
            print(f"warning: skipping trailing batch of {stop - start} record(s)", file=sys.stderr)
            continue
        samples = augment_batch(
            images[start:stop], labels[start:stop], config,
            source_for(start, stop) if method == "attentive_cutmix" else None,
            RngStream(args.seed, start), workers=args.workers,
        )
        stem = os.path.join(args.out, f"batch_{b:05d}")
        formats.write_batch(
            samples, stem + ".atnb", stem + ".json", method=method, master_seed=args.seed,
            config={**echo, "batch_index": b, "batch_start": start},
        )
        lams = [s.lam for s in samples]
        print(f"batch {b:05d}: {len(samples)} samples, lambda mean {np.mean(lams):.6f} "
              f"min {min(lams):.6f} max {max(lams):.6f}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    g2 = args.grid * args.grid
    if not 0 <= args.n_min <= args.n_max <= g2:
        raise UsageError(f"n range must satisfy 0 <= n-min <= n-max <= {g2}")
    records = _load_records(args)[: args.batch_size]
    images = _prepare_images(records, args.resize)
    labels = [one_hot(r.fine_label, _CLASSES[args.dataset]) for r in records]
    provider, source_for = _source_for(args, len(images))
    rows = run_ablation(
        images, labels, range(args.n_min, args.n_max + 1), grid_size=args.grid,
        source=source_for(0, len(images)), rng=RngStream(args.seed), workers=args.workers,
    )
    print(format_ablation(rows))
    os.makedirs(args.out, exist_ok=True)
    report = {
        "config": _config_echo(args, provider),
        "master_seed": args.seed,
        "image_size": list(images[0].shape[:2]),
        "rows": [r.to_dict() for r in rows],
    }
    with open(os.path.join(args.out, "ablation.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _read_png(path):
    from PIL import Image

    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / np.float32(255)
    return as_image(rgb)


def cmd_inspect_attn(args) -> int:
    image = None
    if args.image:
        image = _read_png(args.image)
    elif args.inputs:
        records = formats.read_cifar(args.inputs[0], args.dataset)
        if not 0 <= args.index < len(records):
            raise UsageError(f"--index {args.index} outside [0, {len(records)})")
        image = records[args.index].image
    if image is not None and args.resize is not None:
        image = resize_nearest(image, args.resize)

    provider = _PROVIDERS[args.provider]
    if provider == "file":
        if not args.attn:
            raise UsageError("--provider file needs --attn")
        grid = _load_grids(args.attn[:1])[0]
    elif image is None:
        raise UsageError(f"--provider {args.provider} needs an image (--image or --in)")
    elif provider == "tiny_cnn":
        grid = tiny_cnn_attention(image, _load_weights(args), args.grid)
    else:
        grid = gradient_energy_attention(image, args.grid)

    g = grid.shape[0]
    top = top_n_cells(grid, args.top)
    print(f"attention grid {g}x{g} (provider {provider})")
    for row in grid:
        print(" ".join(str(np.float32(v)) for v in row))
    print(f"top {top.n} cells:")
    for rank, (r, c) in enumerate(top.cells, start=1):
        print(f"{rank:>3}. ({r}, {c}) {np.float32(grid[r, c])}")

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "attention.atng"), "wb") as fh:
        fh.write(formats.dump_attention_file(grid))
    if image is not None:
        with open(os.path.join(args.out, "attention.png"), "wb") as fh:
            fh.write(encode_png(heatmap_overlay(image, grid)))
    return EXIT_OK


def cmd_visualize(args) -> int:
    manifest = args.manifest or os.path.splitext(args.batch)[0] + ".json"
    samples = formats.read_batch(args.batch, manifest)
    png = render_grid_png(samples, args.columns, outline=not args.no_outline)
    out = args.out
    if os.path.isdir(out) or not os.path.splitext(out)[1]:
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, "grid.png")
    with open(out, "wb") as fh:
        fh.write(png)
    print(f"wrote {out} ({len(samples)} samples)")
    return EXIT_OK


_COMMANDS = {
    "augment": cmd_augment,
    "ablate": cmd_ablate,
    "inspect-attn": cmd_inspect_attn,
    "visualize": cmd_visualize,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, RangeError, ShapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
