"""Command-line front end: matrices, metric sweeps, error curves, beams, detection."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from approxdft import analysis, beamforming, spectral
from approxdft.transform import (
    atomic_write_text,
    build_dft,
    check_alpha,
    check_length,
    compile_factored,
    write_matrix_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3

DEFAULT_LENGTHS = [4, 8, 16, 32, 64, 128, 256, 512, 1024]

# beam pointing angles of the 8-point alpha=2 transform, degrees
REFERENCE_BEAMS_8 = [0.00, 14.47, 30.00, 48.59, -90.00, -48.59, -30.00, -14.47]
BEAM_TOL_DEG = 0.01
DELTA_RTOL = 0.05


class UsageError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("APPROXDFT_THREADS")
    if not raw:
        return min(8, os.cpu_count() or 1)
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"APPROXDFT_THREADS must be a positive integer (got {raw!r})") from None
    if val < 1:
        raise UsageError(f"APPROXDFT_THREADS must be a positive integer (got {raw!r})")
    return val


def _int_list(values, what: str) -> list[int]:
    out = []
    for v in values or []:
        for part in str(v).split(","):
            part = part.strip()
            if not part:
                continue
            try:
                out.append(int(part))
            except ValueError:
                raise UsageError(f"{what} must be integers (got {part!r})") from None
    return out


def _lengths(args, default=None) -> list[int]:
    ns = _int_list(args.length, "lengths")
    if not ns and args.length is None:
        ns = list(default or [])
    if not ns:
        raise UsageError("at least one length is required (-n/--length)")
    return [check_length(n) for n in ns]


def _alphas(args, default=None) -> list[int]:
    al = _int_list(args.alpha, "alpha values")
    if not al and args.alpha is None:
        al = list(default or [])
    if not al:
        raise UsageError("at least one alpha is required (-a/--alpha)")
    return [check_alpha(a) for a in al]


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        atomic_write_text(out, text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc


def cmd_matrix(args) -> int:
    n = check_length(args.length_single)
    alpha = None if args.exact else _alphas(args, [2])[0]
    if args.format == "json":
        _emit(compile_factored(n, alpha).to_json() + "\n", args.out)
    else:
        _emit(write_matrix_csv(build_dft(n, alpha)), args.out)
    return EXIT_OK


def _sweep(lengths, alphas):
    items = [(n, a) for a in alphas for n in lengths]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(lambda it: analysis.compute_metrics(*it), items))


def cmd_metrics(args) -> int:
    lengths = _lengths(args, DEFAULT_LENGTHS)
    alphas = _alphas(args, [2])
    records = _sweep(lengths, alphas)
    if args.format == "json":
        rows = []
        for r in records:
            rows.append({
                "N": r.n, "alpha": r.alpha,
                "total_error_energy": r.total_error_energy,
                "orthogonality_deviation": r.orthogonality_deviation,
                "frobenius_error": r.frobenius_error,
                "relative_error": r.relative_frobenius_error,
                **r.complexity.as_dict(),
                "energy_ratio_to_table": r.energy_ratio,
                "delta_ratio_to_table": r.delta_ratio,
            })
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        _emit(analysis.metrics_csv(records, with_reference=True), args.out)
    if args.check:
        return _check_metrics(records)
    return EXIT_OK


def _check_metrics(records) -> int:
    failed = 0
    for r in records:
        # only the alpha=2 and alpha=4 tables are treated as hard targets
        if r.alpha not in (2, 4) or r.reference is None:
            continue
        ref = r.reference[1]
        got = r.orthogonality_deviation
        ok = got == 0 if ref == 0 else abs(got / ref - 1) <= DELTA_RTOL
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} delta N={r.n} alpha={r.alpha}: {got:.4g} vs table {ref:.3g}",
              file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_error_curves(args) -> int:
    lengths = _lengths(args, DEFAULT_LENGTHS)
    alphas = _alphas(args, [2, 16])
    records = _sweep(lengths, alphas)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "logN", "computed", "est1", "est2", "est3"])
    for r in records:
        w.writerow([
            r.alpha, int(math.log2(r.n)), f"{r.relative_frobenius_error:.6g}",
            f"{analysis.estimate_error_I(r.n, r.alpha).relative_error:.6g}",
            f"{analysis.estimate_error_II(r.n, r.alpha).relative_error:.6g}",
            f"{analysis.estimate_error_III(r.n, r.alpha).relative_error:.6g}",
        ])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_beampattern(args) -> int:
    n = check_length(args.length_single)
    alpha = None if args.exact else _alphas(args, [2])[0]
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    t = build_dft(n, alpha)
    exact = build_dft(n, None)
    grid = beamforming.default_grid(args.grid)
    pattern = beamforming.array_pattern(t, grid)
    kw = {"method": args.angle_method}
    angles = beamforming.beam_angles(t, **kw).angles_deg
    dev = np.abs(beamforming.beam_angles(exact, **kw).angles_deg - angles)
    tag = f"n{n}_" + ("exact" if alpha is None else f"a{alpha}")
    out_dir = Path(args.out or ".")
    if not out_dir.is_dir():
        raise UsageError(f"output directory {out_dir} does not exist")
    _emit(beamforming.pattern_csv(pattern), str(out_dir / f"pattern_{tag}.csv"))
    _emit(beamforming.angles_csv(angles, dev), str(out_dir / f"angles_{tag}.csv"))
    if args.check:
        if n != 8 or alpha != 2:
            raise UsageError("--check compares against the 8-point alpha=2 beams only")
        gaps = np.abs(angles - np.array(REFERENCE_BEAMS_8))
        ok = bool(np.all(gaps <= BEAM_TOL_DEG))
        print(f"{'PASS' if ok else 'FAIL'} beam angles max gap {gaps.max():.4f} deg", file=sys.stderr)
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_detect(args) -> int:
    if not 0 < args.zeta < 1:
        raise UsageError(f"--zeta must lie in (0, 1) (got {args.zeta})")
    try:
        x = spectral.load_samples(args.input)
    except OSError as exc:
        raise OSError(f"cannot read {args.input}: {exc.strerror or exc}") from exc
    n = len(x)
    if n < 4 or n & (n - 1):
        lo = 1 << max(2, n.bit_length() - 1)
        raise UsageError(
            f"{args.input}: {n} samples is not a power of two ≥ 4; "
            f"truncate to {lo} or zero-pad to {lo * 2 if lo < n else lo}"
        )
    if args.exact or not args.alpha:
        pr = spectral.exact_periodogram(x)
    else:
        pr = spectral.approx_periodogram(x, _alphas(args)[0])
    report = spectral.whittle_detect(pr, args.zeta, seed=args.seed)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    n = args.length_single
    if n is None or n < 4:
        raise UsageError("-n/--length must be at least 4")
    amps = args.A or []
    phis = args.phi or [0.0] * len(amps)
    if args.bin and args.freq:
        raise UsageError("give tone positions with --bin or --freq, not both")
    if args.bin:
        freqs = [2 * math.pi * b / n for b in args.bin]
    else:
        freqs = list(args.freq or [])
    if not (len(amps) == len(phis) == len(freqs)):
        raise UsageError("--A, --phi and --bin/--freq must be given the same number of times")
    if args.k is not None and args.k != len(amps):
        raise UsageError(f"--k {args.k} does not match {len(amps)} tone(s)")
    order = np.argsort(freqs)
    model = spectral.HarmonicModel(
        tuple(amps[i] for i in order), tuple(phis[i] for i in order),
        tuple(freqs[i] for i in order), args.sd,
    )
    x = spectral.synthesize(model, n, args.seed)
    text = "".join(f"{v:.17g}\n" for v in x)
    _emit(text, args.out)
    if args.out and args.out != "-":
        side = {"n": n, "seed": args.seed, **model.to_dict()}
        if args.bin:
            side["bins"] = sorted(args.bin)
        _emit(json.dumps(side, indent=2) + "\n", str(Path(args.out).with_suffix(".json")))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="approxdft",
        description="Multiplierless approximate DFTs: matrices, metrics, beams and detection.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_out(sp, fmt=False):
        sp.add_argument("--out", help="output path (default: stdout)")
        if fmt:
            sp.add_argument("--format", choices=["csv", "json"], default="csv")

    m = sub.add_parser("matrix", help="dump a transform matrix")
    m.add_argument("-n", "--length", dest="length_single", type=int, required=True)
    m.add_argument("-a", "--alpha", action="append")
    m.add_argument("--exact", action="store_true")
    add_out(m, fmt=True)
    m.set_defaults(func=cmd_matrix)

    mt = sub.add_parser("metrics", help="quality metrics sweep over N and alpha")
    mt.add_argument("-n", "--length", action="append", help="length(s), repeat or comma-separate")
    mt.add_argument("-a", "--alpha", action="append", help="alpha(s), repeat or comma-separate")
    mt.add_argument("--check", action="store_true", help="compare delta with the published tables")
    add_out(mt, fmt=True)
    mt.set_defaults(func=cmd_metrics)

    ec = sub.add_parser("error-curves", help="computed and estimated relative errors")
    ec.add_argument("-n", "--length", action="append")
    ec.add_argument("-a", "--alpha", action="append")
    add_out(ec)
    ec.set_defaults(func=cmd_error_curves)

    bp = sub.add_parser("beampattern", help="multi-beam patterns and pointing angles")
    bp.add_argument("-n", "--length", dest="length_single", type=int, required=True)
    bp.add_argument("-a", "--alpha", action="append")
    bp.add_argument("--exact", action="store_true")
    bp.add_argument("--grid", type=int, default=beamforming.GRID_POINTS, help="pattern grid points")
    bp.add_argument("--angle-method", choices=["refined", "grid"], default="refined",
                    help="refined search or plain argmax on a 1e-3 rad grid")
    bp.add_argument("--check", action="store_true")
    bp.add_argument("--out", help="output directory (default: current directory)")
    bp.set_defaults(func=cmd_beampattern)

    d = sub.add_parser("detect", help="stepwise harmonic detection on samples")
    d.add_argument("input", help="CSV (one value per line) or JSON array of samples")
    d.add_argument("-a", "--alpha", action="append")
    d.add_argument("--exact", action="store_true")
    d.add_argument("--zeta", type=float, default=0.01)
    d.add_argument("--seed", type=int, default=None, help="seed recorded in the report")
    add_out(d)
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("synthesize", help="generate harmonic-process samples")
    s.add_argument("-n", "--length", dest="length_single", type=int, required=True)
    s.add_argument("--k", type=int, default=None, help="number of tones (consistency check)")
    s.add_argument("--A", type=float, action="append", help="tone amplitude (repeat per tone)")
    s.add_argument("--phi", type=float, action="append", help="tone phase in radians")
    s.add_argument("--bin", type=int, action="append", help="tone at Fourier bin p")
    s.add_argument("--freq", type=float, action="append", help="tone frequency in radians")
    s.add_argument("--sd", type=float, default=0.0, help="noise standard deviation")
    s.add_argument("--seed", type=int, default=0)
    add_out(s)
    s.set_defaults(func=cmd_synthesize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"approxdft {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"approxdft {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
