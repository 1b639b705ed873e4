"""Command line front end.

    microshift encode -i in.pgm -o out.msh [-M 3] [-N 3] [--table t.msd]
    microshift decode -i out.msh -o rec.pgm [--method fast] [--subimages K]
    microshift train --corpus dir -o table.msd [-M 3] [-N 3]
    microshift eval --reference a.pgm --test b.pgm [--bitstream out.msh]
    microshift progressive -i out.msh --out-prefix rec [--method fast]

Results are printed as key=value lines.  Exit status is 0 on success, 1 on
runtime errors and 2 on usage errors.
"""

import argparse
import os
import sys

from .container import CompressedContainer
from .context import load_table, train_table
from .core import make_params
from .encoder import encode_image
from .errors import MicroshiftError
from .fast import WlsParams
from .metrics import bpp, psnr, ssim
from .mrf import MrfParams
from .pipeline import decode_image
from .pixelio import read_image, write_image


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_decoder_options(sp, methods):
    sp.add_argument("--method", choices=methods, default="fast")
    sp.add_argument("--table", help="predictor table file (default: built-in)")
    g = sp.add_argument_group("WLS smoothing")
    g.add_argument("--wls-iterations", type=_positive_int, default=WlsParams.iterations)
    g.add_argument("--wls-lambda", type=float, default=WlsParams.lam)
    g.add_argument("--wls-sigma", type=float, default=WlsParams.sigma_c)
    g = sp.add_argument_group("MRF")
    g.add_argument("--mrf-sigma", type=float, default=MrfParams.sigma)
    g.add_argument("--mrf-gamma", type=float, default=MrfParams.gamma)
    g.add_argument("--mrf-tsim", type=float, default=None)
    g.add_argument("--mrf-alpha", type=float, default=MrfParams.alpha_nu)
    g.add_argument("--mrf-sweeps", type=_positive_int, default=MrfParams.max_sweeps)
    g.add_argument("--mrf-margin", type=int, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="microshift", description="Microshift image codec")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("encode", help="compress a PGM/PPM image")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("-M", type=int, choices=(2, 3, 4), default=3)
    sp.add_argument("-N", type=int, choices=(3, 4), default=3)
    sp.add_argument("--table")

    sp = sub.add_parser("decode", help="reconstruct an image from a container")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--subimages", type=int, default=None, metavar="K")
    _add_decoder_options(sp, ("heuristic", "fast", "mrf"))

    sp = sub.add_parser("train", help="learn a predictor table")
    sp.add_argument("--corpus", required=True, help="directory of PGM images")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("-M", type=int, choices=(2, 3, 4), default=3)
    sp.add_argument("-N", type=int, choices=(3, 4), default=3)

    sp = sub.add_parser("eval", help="compare a reconstruction with its reference")
    sp.add_argument("--reference", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--bitstream")

    sp = sub.add_parser("progressive", help="decode every stream prefix")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--out-prefix", required=True)
    _add_decoder_options(sp, ("fast", "mrf"))
    return ap


def _decoder_params(args):
    wls = WlsParams(args.wls_iterations, args.wls_lambda, args.wls_sigma)
    mrf = MrfParams(args.mrf_sigma, args.mrf_gamma, args.mrf_tsim, args.mrf_alpha,
                    args.mrf_sweeps, args.mrf_margin)
    return wls, mrf


def _ext(container):
    return ".pgm" if len(container.planes) == 1 else ".ppm"


def cmd_encode(args, out):
    img = read_image(args.input)
    params = make_params(args.M, args.N)
    table = load_table(args.table, params.M)
    c = encode_image(img, params, table)
    c.save(args.output)
    print(f"bpp={bpp(c):.6f}", file=out)
    print(f"bytes={len(c.to_bytes())}", file=out)


def cmd_decode(args, out):
    c = CompressedContainer.load(args.input, upto=args.subimages)
    nn = c.N * c.N
    k = nn if args.subimages is None else args.subimages
    if not 1 <= k <= nn:
        raise UsageError(f"--subimages must be in 1..{nn}")
    wls, mrf = _decoder_params(args)
    img = decode_image(c, args.method, k, load_table(args.table, c.M), wls, mrf)
    write_image(img, args.output)
    print(f"method={args.method}", file=out)
    print(f"subimages={k}", file=out)


def cmd_train(args, out):
    if not os.path.isdir(args.corpus):
        raise UsageError(f"{args.corpus} is not a directory")
    names = sorted(n for n in os.listdir(args.corpus) if n.lower().endswith((".pgm", ".ppm")))
    if not names:
        raise MicroshiftError(f"no PGM/PPM images in {args.corpus}")
    params = make_params(args.M, args.N)

    def planes():
        for n in names:
            img = read_image(os.path.join(args.corpus, n))
            yield from img.planes

    table = train_table(planes(), params)
    table.save(args.output)
    print(f"images={len(names)}", file=out)
    print(f"checksum={table.checksum:08x}", file=out)


def cmd_eval(args, out):
    ref = read_image(args.reference)
    test = read_image(args.test)
    if (ref.width, ref.height, len(ref.planes)) != (test.width, test.height, len(test.planes)):
        raise MicroshiftError("reference and test images differ in size")
    print(f"psnr_db={psnr(ref.to_array(), test.to_array()):.4f}", file=out)
    print(f"ssim={ssim(ref.to_array(), test.to_array()):.6f}", file=out)
    if args.bitstream:
        print(f"bpp={bpp(CompressedContainer.load(args.bitstream)):.6f}", file=out)


def cmd_progressive(args, out):
    c = CompressedContainer.load(args.input)
    table = load_table(args.table, c.M)
    wls, mrf = _decoder_params(args)
    for k in range(1, c.N * c.N + 1):
        path = f"{args.out_prefix}{k}{_ext(c)}"
        write_image(decode_image(c, args.method, k, table, wls, mrf), path)
        print(f"subimages={k} file={path}", file=out)


COMMANDS = {"encode": cmd_encode, "decode": cmd_decode, "train": cmd_train,
            "eval": cmd_eval, "progressive": cmd_progressive}


def main(argv=None, out=None):
    out = out or sys.stdout
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        src = getattr(args, "input", None)
        if src is not None and not os.path.isfile(src):
            raise UsageError(f"no such input file: {src}")
        COMMANDS[args.command](args, out)
    except UsageError as e:
        ap.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (MicroshiftError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
