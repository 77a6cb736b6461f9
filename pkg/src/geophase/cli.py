"""Command-line front end.

Exit codes: 0 success, 1 oracle disagreement, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import berry, circuit, engine, model

EXIT_OK, EXIT_DISAGREE, EXIT_USAGE = 0, 1, 2
ORACLE_TOL = 1e-6
TRANSPORT_TOL = 1e-6
CONNECTION_H = 1e-5
CONNECTION_SAMPLES = 64

CSV_COLUMNS = (
    "phi_rad", "overlap_re", "overlap_im", "sigma_x", "sigma_y",
    "phase_arg_rad", "phase_unwrapped_rad", "shots",
)

_PI_RE = re.compile(r"^\s*([+-]?)\s*(\d+(?:\.\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d+)?))?\s*$")


class UsageError(ValueError):
    pass


def parse_angle(text: str) -> float:
    """Parse '2pi', 'pi/6', '-3*pi/4', '0.5pi' or plain radians.

    Rational multiples of pi are reduced exactly before multiplying by pi.
    """
    m = _PI_RE.match(text.lower())
    if m:
        sign, num, den = m.groups()
        coef = Fraction(num or "1") / Fraction(den or "1")
        if sign == "-":
            coef = -coef
        return coef.numerator * math.pi / coef.denominator
    try:
        val = float(text)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None
    if not math.isfinite(val):
        raise UsageError(f"angle must be finite, got {text!r}")
    return val


def parse_angle_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("empty angle list")
    return [parse_angle(t) for t in items]


def parse_float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    try:
        return [float(t) for t in items]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def default_grid() -> list[float]:
    return [k * math.pi / 6 for k in range(1, 13)]


@dataclass(frozen=True)
class RunConfig:
    phi_total: float = 2 * math.pi
    n_steps: int = 1
    shots: int | None = engine.DEFAULT_SHOTS  # None means exact mode
    seed: int | None = 0
    noise_p: float = 0.0
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        if not 0.0 < self.phi_total <= 2 * math.pi:
            raise UsageError(f"phi must lie in (0, 2pi], got {self.phi_total!r}")
        if self.n_steps < 1:
            raise UsageError(f"steps must be >= 1, got {self.n_steps}")
        if self.shots is not None and self.shots < 1:
            raise UsageError(f"shots must be >= 1, got {self.shots}")
        if not 0.0 <= self.noise_p <= 1.0:
            raise UsageError(f"noise-p must lie in [0, 1], got {self.noise_p}")
        if self.output_format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.output_format!r}")


# --- serialization --------------------------------------------------------

def _num(x) -> str:
    return x if isinstance(x, str) else repr(x)


def records_to_csv(records: Sequence[engine.PhaseRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_num(v) for v in r.row()])
    return buf.getvalue()


def record_to_dict(r: engine.PhaseRecord) -> dict:
    return dict(zip(CSV_COLUMNS, r.row()))


def records_to_json(records: Sequence[engine.PhaseRecord]) -> str:
    return json.dumps([record_to_dict(r) for r in records], indent=2) + "\n"


def emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# --- commands -------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> engine.PhaseRecord:
    return engine.measure_phase(cfg.phi_total, cfg.n_steps, cfg.shots, cfg.seed, cfg.noise_p)


def cmd_sweep(cfg: RunConfig, grid: Sequence[float] | None = None) -> list[engine.PhaseRecord]:
    grid = default_grid() if grid is None else list(grid)
    if not grid:
        raise UsageError("sweep grid is empty")
    out = []
    for k, phi in enumerate(sorted(grid)):
        RunConfig(phi, cfg.n_steps, cfg.shots, cfg.seed, cfg.noise_p)
        out.append(engine.measure_phase(phi, cfg.n_steps, cfg.shots, cfg.seed, cfg.noise_p, stream=(k,)))
    return out


GAUGES = {
    "none": None,
    "half": lambda phi: phi / 2,
    "sin": math.sin,
}
GAUGE_SLOPES = {
    "half": lambda phi: 0.5,
    "sin": math.cos,
}


@dataclass
class OracleReport:
    closed: bool
    protocol_phase: float | None
    oracle_phase: float
    max_connection: float
    max_gauge_error: float | None
    agree: bool
    lines: list

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.agree else EXIT_DISAGREE


def cmd_oracle(phi_total: float = 2 * math.pi, n_steps: int = 12, gauge: str = "none",
               h: float = CONNECTION_H) -> OracleReport:
    if gauge not in GAUGES:
        raise UsageError(f"unknown gauge {gauge!r}; choose from {sorted(GAUGES)}")
    if not 0.0 < phi_total <= 2 * math.pi:
        raise UsageError(f"phi must lie in (0, 2pi], got {phi_total!r}")
    if n_steps < 3:
        raise UsageError("oracle needs at least 3 loop steps")

    base = berry.eigenbranch(0)
    branch = base if GAUGES[gauge] is None else berry.gauge_transform(base, GAUGES[gauge])
    samples = [phi_total * k / CONNECTION_SAMPLES for k in range(CONNECTION_SAMPLES)]
    max_a = max(abs(berry.connection(base, p, h)) for p in samples)
    gauge_err = None
    if GAUGES[gauge] is not None:
        slope = GAUGE_SLOPES[gauge]
        gauge_err = max(abs(berry.connection(branch, p, h) - slope(p)) for p in samples)

    closed = math.isclose(phi_total, 2 * math.pi, rel_tol=0, abs_tol=1e-12)
    lines = [f"branch: {branch.label}", f"path: [0, {phi_total!r}]"]
    lines.append(f"max|A| over {CONNECTION_SAMPLES} samples (h={h:g}): {max_a:.3e}")
    if gauge_err is not None:
        lines.append(f"max|A_gauge - f'| : {gauge_err:.3e}")
    transport_ok = max_a < TRANSPORT_TOL

    if not closed:
        oracle = berry.open_path_phase(branch, n_steps, phi_total)
        lines.append(f"open-path overlap phase: {oracle!r}")
        lines.append("open path, no holonomy claim")
        return OracleReport(False, None, oracle, max_a, gauge_err, transport_ok, lines)

    protocol = engine.measure_phase(phi_total, shots=None).phase_arg
    oracle = berry.pancharatnam_phase(branch, n_steps)
    diff = abs(engine.wrap_phase(protocol - oracle))
    agree = diff <= ORACLE_TOL and transport_ok
    lines.append(f"protocol phase: {protocol!r}")
    lines.append(f"pancharatnam phase (N={n_steps}): {oracle!r}")
    lines.append(f"|difference|: {diff:.3e}")
    lines.append("AGREE" if agree else "DISAGREE")
    return OracleReport(True, protocol, oracle, max_a, gauge_err, agree, lines)


def protocol_circuits(cfg: RunConfig) -> dict[str, circuit.Circuit]:
    steps = circuit.uniform_steps(cfg.phi_total, cfg.n_steps)
    return {
        basis.value.lower(): circuit.transpile(circuit.build_protocol(steps, basis))
        for basis in (circuit.MeasureBasis.X, circuit.MeasureBasis.Y)
    }


def cmd_qasm(cfg: RunConfig, name: str = "protocol", out_dir: str = ".") -> list[Path]:
    paths = []
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    for suffix, c in protocol_circuits(cfg).items():
        p = Path(out_dir) / f"{name}_{suffix}.qasm"
        p.write_text(circuit.to_qasm(c), encoding="utf-8")
        paths.append(p)
    return paths


def cmd_vibronic(model_file: str, q: Sequence[float]) -> list[float]:
    sys_ = model.load_vibronic(model_file)
    return model.split_levels(sys_, q)


def levels_text(levels: Sequence[float], fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"levels": list(levels)}, indent=2) + "\n"
    if fmt == "csv":
        return "index,level\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(levels))
    return "".join(f"{v!r}\n" for v in levels)


# --- argument parsing -----------------------------------------------------

def _add_protocol_flags(p: argparse.ArgumentParser, fmt_default: str) -> None:
    p.add_argument("--steps", type=int, default=1, help="equal increments per protocol run")
    p.add_argument("--shots", type=int, default=engine.DEFAULT_SHOTS)
    p.add_argument("--exact", action="store_true", help="exact expectations, no sampling")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-p", type=float, default=0.0, help="depolarizing probability on the probe")
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geophase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="measure the phase after one transport")
    p.add_argument("--phi", default="2pi", help="total angle, e.g. 2pi, pi/6, 1.57")
    _add_protocol_flags(p, "json")

    p = sub.add_parser("sweep", help="measure the phase over a grid of angles")
    p.add_argument("--grid", default=None, help="comma-separated angles (default k*pi/6, k=1..12)")
    _add_protocol_flags(p, "csv")

    p = sub.add_parser("oracle", help="compare the protocol with the Berry oracles")
    p.add_argument("--phi", default="2pi")
    p.add_argument("--steps", type=int, default=12, help="loop discretization")
    p.add_argument("--gauge", choices=sorted(GAUGES), default="none")

    p = sub.add_parser("qasm", help="write transpiled X/Y protocol circuits")
    p.add_argument("--phi", default="2pi")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--name", default="protocol")
    p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("vibronic", help="split levels of a vibronic model file")
    p.add_argument("--model", required=True)
    p.add_argument("--q", required=True, help="comma-separated normal coordinates")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", default=None)
    return parser


def _config(args, phi: float) -> RunConfig:
    return RunConfig(
        phi_total=phi,
        n_steps=args.steps,
        shots=None if args.exact else args.shots,
        seed=args.seed,
        noise_p=args.noise_p,
        output_format=args.format,
        output_path=args.out,
    )


def _dispatch(args) -> int:
    if args.command == "run":
        cfg = _config(args, parse_angle(args.phi))
        rec = cmd_run(cfg)
        if cfg.output_format == "csv":
            text = records_to_csv([rec])
        else:
            d = record_to_dict(rec)
            if rec.counts:
                d["counts"] = rec.counts
            text = json.dumps(d, indent=2) + "\n"
        emit(text, cfg.output_path)
        return EXIT_OK

    if args.command == "sweep":
        grid = default_grid() if args.grid is None else parse_angle_list(args.grid)
        cfg = _config(args, grid[0])
        recs = cmd_sweep(cfg, grid)
        text = records_to_csv(recs) if cfg.output_format == "csv" else records_to_json(recs)
        emit(text, cfg.output_path)
        return EXIT_OK

    if args.command == "oracle":
        rep = cmd_oracle(parse_angle(args.phi), args.steps, args.gauge)
        print("\n".join(rep.lines))
        return rep.exit_code

    if args.command == "qasm":
        cfg = RunConfig(phi_total=parse_angle(args.phi), n_steps=args.steps)
        for p in cmd_qasm(cfg, args.name, args.out):
            print(p)
        return EXIT_OK

    if args.command == "vibronic":
        levels = cmd_vibronic(args.model, parse_float_list(args.q))
        emit(levels_text(levels, args.format), args.out)
        return EXIT_OK

    raise UsageError(f"unknown command {args.command!r}")  # pragma: no cover


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except model.ModelFileError as exc:
        print(f"error: {args.model}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
