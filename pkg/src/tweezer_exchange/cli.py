"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 3 not certified
(only with --fail-on-separable).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from . import pipelines
from .config import ConfigError, load_config, paper_defaults
from .potential import (
    GridTooSmallError,
    NoBoundStateError,
    depth_over_trap_frequency,
    harmonic_modes,
    j_ex,
    j_ex_numeric,
    u_eg,
)
from .witness import CertificationInput, CertificationResult, certify

EXIT_OK, EXIT_USAGE, EXIT_SEPARABLE = 0, 1, 3

CERTIFY_FIELDS = ("contrast", "contrast_err", "p_upup", "p_upup_err", "p_dndn", "p_dndn_err")
CERTIFY_OPTIONAL = ("ap_success_f", "ap_success_f_err")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _config(args):
    return load_config(args.config, seed=args.seed, shots=args.shots)


def _fit_line(name, fit) -> str:
    return (
        f"{name}: contrast={fit.contrast:.4f}({fit.contrast_se:.4f}) "
        f"frequency_hz={fit.frequency_hz:.4f}({fit.frequency_se:.4f}) offset={fit.offset:.4f}"
    )


def cmd_exchange_scan(args) -> int:
    out = pipelines.pipeline_exchange_scan(_config(args))
    with _output(args.out) as fh:
        out.write_csv(fh)
    for name, fit in out.fits.items():
        print(_fit_line(name, fit), file=sys.stderr)
    return EXIT_OK


def cmd_depth_sweep(args) -> int:
    out = pipelines.pipeline_depth_sweep(_config(args))
    with _output(args.out) as fh:
        out.write_csv(fh)
    return EXIT_OK


def cmd_parity_scan(args) -> int:
    res = pipelines.pipeline_parity_scan(_config(args))
    with _output(args.out) as fh:
        res.curve.write_csv(fh)
    print(_fit_line("parity", res.fit), file=sys.stderr)
    print(f"model contrast: {res.target_contrast:.4f}", file=sys.stderr)
    print(format_report(res.certification), file=sys.stderr)
    if args.fail_on_separable and not res.certification.entangled:
        return EXIT_SEPARABLE
    return EXIT_OK


def cmd_parity_vs_exchange(args) -> int:
    out = pipelines.pipeline_parity_vs_exchange(_config(args))
    with _output(args.out) as fh:
        out.write_csv(fh)
    for name, fit in out.fits.items():
        print(_fit_line(name, fit), file=sys.stderr)
    return EXIT_OK


def read_certification_input(path) -> CertificationInput:
    """Parse a JSON object or ``key = value`` lines into a CertificationInput."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: expected a JSON object")
    except json.JSONDecodeError:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
    values = {}
    for key in CERTIFY_FIELDS:
        if key not in raw:
            raise UsageError(f"{path}: missing field {key!r}")
    unknown = set(raw) - set(CERTIFY_FIELDS) - set(CERTIFY_OPTIONAL)
    if unknown:
        raise UsageError(f"{path}: unknown field(s) {', '.join(sorted(unknown))}")
    for key in CERTIFY_FIELDS + CERTIFY_OPTIONAL:
        if key in raw and raw[key] is not None:
            try:
                values[key] = float(raw[key])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"{path}: field {key!r} is not a number") from exc
    try:
        return CertificationInput(**values)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def format_report(r: CertificationResult) -> str:
    verdict = "ENTANGLED" if r.entangled else "NOT CERTIFIED"
    lines = [
        f"verdict: {verdict}",
        f"contrast C = {r.contrast:.4f} +/- {r.contrast_err:.4f}",
        f"separable bound C_bnd = {r.c_bound:.4f} +/- {r.c_bound_err:.4f}",
        f"separation: {r.sigma_separation:.2f} sigma",
        f"fidelity F = {r.fidelity:.4f} (witness F > 1/2: {'yes' if r.fidelity_witness else 'no'})",
        f"concurrence lower bound: {r.concurrence_lower:.4f}",
    ]
    if r.f_succ is not None:
        lines.append(f"success-projected fidelity F_succ = {r.f_succ:.4f} +/- {r.f_succ_err:.4f}")
    if r.mc_sigma is not None:
        lines.append(f"Monte Carlo separation: {r.mc_sigma:.2f} sigma")
    return "\n".join(lines)


def format_kv(r: CertificationResult) -> str:
    out = []
    for key, value in r.as_dict().items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif value is None:
            value = ""
        elif isinstance(value, float):
            value = f"{value:.17g}"
        out.append(f"{key}={value}")
    return "\n".join(out)


def cmd_certify(args) -> int:
    inp = read_certification_input(args.input)
    res = certify(inp, mc_samples=args.mc_samples, seed=args.seed or 0)
    text = format_kv(res) if args.kv else format_report(res)
    with _output(args.out) as fh:
        print(text, file=fh)
    if args.fail_on_separable and not res.entangled:
        return EXIT_SEPARABLE
    return EXIT_OK


def cmd_jex(args) -> int:
    cfg = _config(args)
    trap = cfg.trap if args.depth_hz is None else cfg.trap.with_depth(args.depth_hz)
    modes = harmonic_modes(trap)
    lines = [
        f"depth_hz={trap.depth_hz:.17g}",
        f"depth_over_trap_quantum={depth_over_trap_frequency(trap):.17g}",
    ]
    for axis, w, r0 in zip("xyz", modes.omega, modes.r0):
        lines.append(f"trap_frequency_{axis}_hz={w / (2 * 3.141592653589793):.17g}")
        lines.append(f"oscillator_length_{axis}_m={r0:.17g}")
    lines.append(f"u_eg_harmonic_hz={u_eg(trap):.17g}")
    lines.append(f"j_ex_harmonic_hz={j_ex(trap):.17g}")
    try:
        lines.append(f"j_ex_numeric_hz={j_ex_numeric(trap, cfg.grid_points):.17g}")
    except (GridTooSmallError, NoBoundStateError) as exc:
        lines.append(f"j_ex_numeric_hz=nan  # {exc}")
    with _output(args.out) as fh:
        print("\n".join(lines), file=fh)
    return EXIT_OK


def cmd_show_config(args) -> int:
    with _output(args.out) as fh:
        json.dump(paper_defaults(), fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config merged over the shipped defaults")
    common.add_argument("--seed", type=int, help="base RNG seed (point k uses seed + k)")
    common.add_argument("--shots", type=int, help="shots per grid point")
    common.add_argument("--out", help="output file (default: stdout)")

    parser = _Parser(prog="tweezer-exchange", description="Two-atom spin-exchange simulator and entanglement certifier")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exchange-scan", parents=[common], help="spin populations vs exchange time (CSV)")
    p.set_defaults(func=cmd_exchange_scan)
    p = sub.add_parser("depth-sweep", parents=[common], help="exchange frequency vs tweezer depth (CSV)")
    p.set_defaults(func=cmd_depth_sweep)
    p = sub.add_parser("parity-scan", parents=[common], help="parity vs gradient time, fit and certify (CSV)")
    p.add_argument("--fail-on-separable", action="store_true", help="exit 3 when entanglement is not certified")
    p.set_defaults(func=cmd_parity_scan)
    p = sub.add_parser("parity-vs-exchange", parents=[common], help="parity vs exchange time (CSV)")
    p.set_defaults(func=cmd_parity_vs_exchange)
    p = sub.add_parser("certify", parents=[common], help="certify entanglement from measured numbers")
    p.add_argument("input", help="JSON object or 'key = value' file with " + ", ".join(CERTIFY_FIELDS))
    p.add_argument("--kv", action="store_true", help="machine-readable key=value output")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo resamples for a cross-check")
    p.add_argument("--fail-on-separable", action="store_true", help="exit 3 when entanglement is not certified")
    p.set_defaults(func=cmd_certify)
    p = sub.add_parser("jex", parents=[common], help="one-shot exchange-frequency calculator")
    p.add_argument("--depth-hz", type=float, help="override the configured trap depth")
    p.set_defaults(func=cmd_jex)
    p = sub.add_parser("show-config", parents=[common], help="print the default configuration")
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
