"""Command-line interface: ``sparse-upmix {upmix,doa,fieldmap,layers}``.

Exit codes: 0 success, 2 usage error, 3 input format error,
4 numerical divergence, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import AmbisonicConvention, MultichannelSignal, convert_convention, read_wav, write_wav
from .dictionary import DEFAULT_FRAME_LENGTHS, Dictionary
from .errors import (DimensionError, DivergenceError, UnsupportedFormatError, UpmixError,
                     ValidationError, WavParseError)
from .fieldmap import energy_map, write_map
from .mdct import LayerSpec, mdct_analyze
from .pipeline import (DEFAULT_BLOCK, DEFAULT_CROSSFADE, LINEAR_FRAME_LENGTH, block_starts, normalize_mode,
                       upmix)
from .planewave import FoaComplexBin, FoaRealBin, azimuth_elevation, extract_harpex, extract_mdct
from .solver import SolverConfig, solve

log = logging.getLogger("sparse_upmix")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INPUT, EXIT_DIVERGENCE = 0, 1, 2, 3, 4


def _layers(text: str) -> tuple:
    try:
        values = tuple(sorted(int(v) for v in text.split(",") if v.strip()))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty layer list")
    return values


def _grid(text: str) -> tuple:
    try:
        a, e = text.lower().split("x")
        return int(a), int(e)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 72x36, got {text!r}") from None


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layers", type=_layers, default=DEFAULT_FRAME_LENGTHS,
                   help="MDCT frame lengths, comma separated (default 32,128,256,1024,2048)")
    p.add_argument("--iters", type=int, default=2000, help="solver iterations (default 2000)")
    p.add_argument("--alpha0", type=float, default=None,
                   help="initial L1 weight (default 0.1 * max |analysis coefficient|)")
    p.add_argument("--step", type=float, default=None, help="gradient step (default 1/(2*layers))")
    p.add_argument("--lambda-alias", type=float, default=0.5, help="aliasing loss weight (default 0.5)")
    p.add_argument("--no-group", action="store_true", help="shrink channels independently")
    p.add_argument("--block", type=int, default=DEFAULT_BLOCK, help="block length in samples (default 32768)")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", type=Path, help="input WAV")
    p.add_argument("--in-convention", default="ambix", choices=["ambix", "fuma", "paper"],
                   help="first-order input convention; fuma/paper = (W,X,Y,Z) with W/sqrt(2) (default ambix)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-upmix",
                                     description="Upmix first-order ambisonics via sparse multi-resolution MDCT.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default 1, bit-reproducible)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("upmix", help="FOA WAV -> HOA (AmbiX) WAV")
    _add_input_args(p)
    p.add_argument("output", type=Path)
    p.add_argument("--order", type=int, default=7, choices=range(1, 8), metavar="{1..7}")
    p.add_argument("--mode", default="sparse", choices=["linear", "sparse", "sparse-noalias"])
    _add_solver_args(p)
    p.add_argument("--trace", type=Path, help="write solver trace CSV here")
    p.set_defaults(func=cmd_upmix)

    p = sub.add_parser("doa", help="per-bin direction-of-arrival CSV")
    _add_input_args(p)
    p.add_argument("-o", "--output", type=Path, required=True)
    p.add_argument("--estimator", default="mdct", choices=["mdct", "harpex"])
    p.add_argument("--frame", type=int, default=LINEAR_FRAME_LENGTH,
                   help="MDCT/FFT frame length for the linear analysis (default 2048)")
    p.add_argument("--sparse", action="store_true", help="mdct estimator: use the sparse decomposition")
    _add_solver_args(p)
    p.set_defaults(func=cmd_doa)

    p = sub.add_parser("fieldmap", help="directional energy map (CSV or PGM)")
    p.add_argument("input", type=Path, help="ambisonic WAV, ACN/SN3D")
    p.add_argument("output", type=Path)
    p.add_argument("--format", choices=["csv", "pgm"], default=None, help="default: from output suffix")
    p.add_argument("--grid", type=_grid, default=(72, 36), help="azimuth x elevation cells (default 72x36)")
    p.add_argument("--start", type=int, default=0, help="window start sample")
    p.add_argument("--stop", type=int, default=None, help="window end sample (default: end)")
    p.set_defaults(func=cmd_fieldmap)

    p = sub.add_parser("layers", help="sparse decomposition, one coefficient-magnitude CSV per layer")
    _add_input_args(p)
    p.add_argument("outdir", type=Path)
    p.add_argument("--mode", default="sparse", choices=["sparse", "sparse-noalias"])
    _add_solver_args(p)
    p.add_argument("--channel", type=int, default=None, help="dump one channel (default: norm over channels)")
    p.set_defaults(func=cmd_layers)
    return parser


def _solver_config(args, mode: str = "sparse") -> SolverConfig:
    return SolverConfig(iterations=args.iters, step_size=args.step, alpha0=args.alpha0,
                        alias_weight=0.0 if normalize_mode(mode) == "sparse_no_alias" else args.lambda_alias,
                        group_sparsity=not args.no_group, workers=args.threads)


def _read_foa(args) -> MultichannelSignal:
    sig = read_wav(args.input)
    if sig.n_channels != 4:
        raise DimensionError(f"{args.input}: expected 4 channels, found {sig.n_channels}")
    return convert_convention(sig, AmbisonicConvention.parse(args.in_convention),
                              AmbisonicConvention.PAPER_BFORMAT)


def _trace_paths(path: Path, n: int) -> list:
    if n == 1:
        return [path]
    return [path.with_name(f"{path.stem}_block{k}{path.suffix}") for k in range(n)]


def cmd_upmix(args) -> int:
    foa = _read_foa(args)
    traces = []
    hoa = upmix(foa, order=args.order, mode=args.mode, frame_lengths=args.layers,
                solver=_solver_config(args, args.mode), block=args.block, crossfade=DEFAULT_CROSSFADE,
                traces=traces, threads=args.threads)
    write_wav(hoa, args.output)
    if args.trace is not None and traces:
        for trace, path in zip(traces, _trace_paths(args.trace, len(traces))):
            trace.write_csv(path)
    log.info("wrote %d channels x %d samples to %s", hoa.n_channels, hoa.n_samples, args.output)
    return EXIT_OK


DOA_HEADER = ["layer", "frame", "bin", "azimuth_deg", "elevation_deg", "a1", "a2"]


def _fmt(v: float) -> str:
    return "nan" if np.isnan(v) else repr(float(v))


def _stft(data: np.ndarray, n: int) -> np.ndarray:
    """Sine-window STFT, hop n/2, padded like the MDCT framing: ``(channels, frames, n/2 + 1)``."""
    hop = n // 2
    total = Dictionary.padded_length(data.shape[1], (n,))
    padded = np.pad(data, ((0, 0), (hop, hop + total - data.shape[1])))
    blocks = padded.reshape(data.shape[0], -1, hop)
    frames = np.concatenate([blocks[:, :-1], blocks[:, 1:]], axis=-1)
    return np.fft.rfft(frames * LayerSpec(n).window, axis=-1)


def cmd_doa(args) -> int:
    foa = _read_foa(args)
    rows = 0
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        if args.estimator == "mdct":
            writer.writerow(DOA_HEADER)
            for frame_length, coeffs in _doa_representation(foa, args):
                est = extract_mdct(FoaRealBin(*coeffs))
                az, el = azimuth_elevation(est.direction)
                nz = np.nonzero(np.any(coeffs != 0, axis=0))
                for f, k in zip(*nz):
                    writer.writerow([frame_length, f, k, _fmt(az[f, k]), _fmt(el[f, k]),
                                     repr(float(est.amp_directional[f, k])), repr(float(est.amp_omni[f, k]))])
                    rows += 1
            print(f"{rows} bins written to {args.output}")
        else:
            writer.writerow(DOA_HEADER + ["wave", "valid"])
            spec = _stft(foa.data, args.frame)
            est = extract_harpex(FoaComplexBin(*spec))
            fallback = est.uses_fallback
            nz = np.nonzero(np.any(spec != 0, axis=0))
            n_fallback = 0
            for f, k in zip(*nz):
                if fallback[f, k]:
                    n_fallback += 1
                    waves = [(est.fallback_real, 1), (est.fallback_imag, 2)]
                    for part, idx in waves:
                        if not np.any(part.direction[f, k]) and part.amp_omni[f, k] == 0:
                            continue
                        az, el = azimuth_elevation(part.direction[f, k])
                        writer.writerow([args.frame, f, k, _fmt(az), _fmt(el),
                                         repr(float(part.amp_directional[f, k])),
                                         repr(float(part.amp_omni[f, k])), idx, 0])
                        rows += 1
                    continue
                for d, a, idx in ((est.direction_1, est.amp_1, 1), (est.direction_2, est.amp_2, 2)):
                    az, el = azimuth_elevation(d[f, k])
                    writer.writerow([args.frame, f, k, _fmt(az), _fmt(el), repr(float(a[f, k].real)),
                                     repr(float(a[f, k].imag)), idx, 1])
                    rows += 1
            print(f"{rows} rows written to {args.output}; {n_fallback} of {len(nz[0])} bins "
                  f"invalid or degenerate (fallback used)")
    return EXIT_OK


def _doa_representation(foa: MultichannelSignal, args):
    if not args.sparse:
        spec = LayerSpec(args.frame)
        data = np.pad(foa.data, ((0, 0), (0, Dictionary.padded_length(foa.n_samples, (args.frame,))
                                          - foa.n_samples)))
        yield args.frame, mdct_analyze(data, spec, args.threads)
        return
    config = _solver_config(args)
    for rep, dictionary, _ in _solve_blocks(foa.data, args, config):
        for spec, coeffs in zip(dictionary.layers, rep.layers):
            yield spec.frame_length, coeffs


def _solve_blocks(data: np.ndarray, args, config: SolverConfig):
    n = data.shape[1]
    starts = block_starts(n, args.block, DEFAULT_CROSSFADE)
    seg_len = Dictionary.padded_length(n, args.layers) if len(starts) == 1 else args.block
    for start in starts:
        seg = data[:, start:start + seg_len]
        seg = np.pad(seg, ((0, 0), (0, seg_len - seg.shape[1])))
        dictionary = Dictionary.from_lengths(args.layers, seg_len)
        rep, trace = solve(seg, dictionary, config)
        yield rep, dictionary, trace


def cmd_fieldmap(args) -> int:
    hoa = read_wav(args.input)
    stop = hoa.n_samples if args.stop is None else args.stop
    emap = energy_map(hoa, args.grid, (args.start, stop))
    write_map(emap, args.output, args.format)
    az, el = emap.argmax_angles()
    print(f"peak at azimuth {az:g} deg, elevation {el:g} deg; peak/mean {emap.peak_to_mean():.3f}")
    return EXIT_OK


def cmd_layers(args) -> int:
    sig = read_wav(args.input)
    if sig.n_channels == 4:
        sig = convert_convention(sig, AmbisonicConvention.parse(args.in_convention),
                                 AmbisonicConvention.PAPER_BFORMAT)
    config = _solver_config(args, args.mode)
    blocks = list(_solve_blocks(sig.data, args, config))
    for k, (rep, dictionary, _) in enumerate(blocks):
        stem = "layer" if len(blocks) == 1 else f"block{k}_layer"
        for path in rep.write_layer_csvs(dictionary, args.outdir, stem=stem, channel=args.channel):
            log.info("wrote %s", path)
    print(f"{len(blocks) * len(args.layers)} layer CSVs written to {args.outdir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WavParseError, UnsupportedFormatError, DimensionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UpmixError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
