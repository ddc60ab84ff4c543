"""Command-line interface.

    xxcorr eval       --n 5 --t 0.5 --h 1 --T 1 --grid 256
    xxcorr sweep      --n 0:8 --t 0,0.5,1 --h 1 --T 1 --out g.csv
    xxcorr verify-al  --n 3 --t 0.8 --h 1 --T 1 --fd-step 1e-3
    xxcorr verify-tau --n 3 --t 0.8 --h 1 --T 1 --fd-step 1e-3
    xxcorr asym       --n 2 --t 1 --h 1 --T 1
    xxcorr oracle     --n 1:3 --t 0,0.25 --h 0 --T 2 --L 12
    xxcorr converge   --n 4 --t 1 --h 0 --T 1 --grids 128,256,512

Exit codes: 0 success, 1 argument error, 2 numerical failure.
Worker processes for multi-point commands are capped by XXCORR_THREADS.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import predict_log_g
from .errors import DomainError, NumericalFailure
from .fredholm import assemble
from .grid import MIN_NODES, CircleGrid
from .integrable import al_residuals, tau_residuals
from .model import ModelParams
from .oracle import ChainSpec, center_sites, ed_correlator

SIGN_NOTE = "g carries the calibrated global sign fixed against exact diagonalisation"

# Thresholds reported by verify-al / verify-tau at fd_step = 1e-3.
THRESHOLDS = {"AL_minus": 1e-5, "AL_plus": 1e-5, "TAU_20": 1e-5, "TAU_21": 1e-8, "TAU_22": 1e-5}

EVAL_FIELDS = [
    "n", "t", "h", "T", "grid", "g_re", "g_im", "abs_g", "sigma_re", "sigma_im",
    "b_pp_re", "b_pp_im", "b_mm_re", "b_mm_im", "G_re", "G_im",
]


class ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


@dataclass
class RunConfig:
    command: str
    n: list[int]
    t: list[float]
    h: list[float]
    T: list[float]
    grid_size: int | None = None
    fd_step: float = 1e-3
    output_path: str | None = None
    format: str = "json"
    grids: list[int] = field(default_factory=list)
    L: int = 12

    def validate(self) -> None:
        for name in ("n", "t", "h", "T"):
            if not getattr(self, name):
                raise ArgumentError(f"--{name} range is empty")
        if self.grid_size is not None and self.grid_size < MIN_NODES:
            raise ArgumentError(f"--grid must be at least {MIN_NODES}, got {self.grid_size}")
        if not 1e-5 <= self.fd_step <= 1e-2:
            raise ArgumentError(f"--fd-step must lie in [1e-5, 1e-2], got {self.fd_step}")
        if any(T <= 0 for T in self.T):
            raise ArgumentError("--T must be positive")
        if any(g < MIN_NODES for g in self.grids):
            raise ArgumentError(f"--grids entries must be at least {MIN_NODES}")

    def points(self):
        return [ModelParams(h, T, n, t) for h, T, n, t in itertools.product(self.h, self.T, self.n, self.t)]


def _parse_range(text: str, kind=float) -> list:
    """'a,b,c' or inclusive 'start:stop[:step]' (step defaults to 1)."""
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, stop = parts[:2]
            step = parts[2] if len(parts) == 3 else 1.0
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + k * step for k in range(max(count, 0))]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ArgumentError(f"cannot parse range {text!r}") from None
    if kind is int:
        if any(v != int(v) for v in values):
            raise ArgumentError(f"expected integers in {text!r}")
        return [int(v) for v in values]
    return [round(v, 12) for v in values]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".16e")
    return str(value)


def _json_value(value) -> str:
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in value) + "]"
    text = _fmt(value)
    # JSON has no inf/nan literals
    return json.dumps(text) if text in ("nan", "inf", "-inf") else text


def _json_object(row: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in row.items()) + "}"


def render(rows: list[dict], fmt: str, single: bool = False, warnings: list[str] = ()) -> str:
    if fmt == "json":
        if single:
            return _json_object(rows[0]) + "\n"
        return "[\n" + ",\n".join("  " + _json_object(r) for r in rows) + "\n]\n"
    columns = [c for c in rows[0] if c != "warnings"]
    lines = [f"# warning: {w}" for w in warnings]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def _grid(cfg: RunConfig, p: ModelParams) -> CircleGrid:
    return CircleGrid(cfg.grid_size) if cfg.grid_size else CircleGrid.for_point(p.n, p.t)


def _eval_row(args) -> dict:
    p, grid_size = args
    grid = CircleGrid(grid_size) if grid_size else CircleGrid.for_point(p.n, p.t)
    ps = assemble(p, grid)
    row = dict(
        n=p.n, t=p.t, h=p.h, T=p.T, grid=grid.size,
        g_re=ps.g.real, g_im=ps.g.imag, abs_g=abs(ps.g),
        sigma_re=ps.sigma.real, sigma_im=ps.sigma.imag,
        b_pp_re=ps.b_pp.real, b_pp_im=ps.b_pp.imag,
        b_mm_re=ps.b_mm.real, b_mm_im=ps.b_mm.imag,
        G_re=ps.G.real, G_im=ps.G.imag,
    )
    row["warnings"] = list(ps.warnings) + [SIGN_NOTE]
    return row


def _workers() -> int:
    cap = os.environ.get("XXCORR_THREADS")
    count = os.cpu_count() or 1
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            raise ArgumentError(f"XXCORR_THREADS must be an integer, got {cap!r}") from None
    return count


def _map(fn, items):
    """Ordered map, distributed over worker processes when that helps."""
    workers = min(_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _collect_warnings(rows):
    seen = []
    for r in rows:
        for w in r.get("warnings", []):
            if w not in seen:
                seen.append(w)
    return seen


def cmd_eval(cfg: RunConfig):
    rows = [_eval_row((p, cfg.grid_size)) for p in cfg.points()]
    return rows, f"g = {rows[0]['g_re']:.6g}{rows[0]['g_im']:+.6g}i", len(rows) == 1


def cmd_sweep(cfg: RunConfig):
    rows = _map(_eval_row, [(p, cfg.grid_size) for p in cfg.points()])
    return rows, f"{len(rows)} points evaluated", False


def _residual_rows(args):
    p, fn, fd_step, grid_size = args
    reports = fn(p, fd_step, grid_size)
    size = grid_size or CircleGrid.for_point(abs(p.n) + 1, abs(p.t) + 0.01).size
    return [
        dict(equation_id=r.equation_id.value, n=p.n, t=p.t, h=p.h, T=p.T, N=size,
             fd_step=fd_step, abs_residual=r.abs_residual)
        for r in reports
    ]


def _cmd_verify(cfg: RunConfig, fn):
    rows = list(itertools.chain.from_iterable(
        _map(_residual_rows, [(p, fn, cfg.fd_step, cfg.grid_size) for p in cfg.points()])
    ))
    bad = [r for r in rows if not r["abs_residual"] < THRESHOLDS[r["equation_id"]]]
    return rows, f"{len(rows) - len(bad)}/{len(rows)} residuals below threshold", False


def cmd_verify_al(cfg):
    return _cmd_verify(cfg, al_residuals)


def cmd_verify_tau(cfg):
    return _cmd_verify(cfg, tau_residuals)


def cmd_asym(cfg: RunConfig):
    rows = []
    for p in cfg.points():
        pred = predict_log_g(p.n, p.t, p.h, p.T)
        g = assemble(p, _grid(cfg, p)).g
        rows.append(dict(
            n=p.n, t=p.t, h=p.h, T=p.T, regime=pred.regime.value, phi=pred.phi,
            p0=_nan(pred.p0), nu_plus=_nan(pred.nu_plus), nu_minus=_nan(pred.nu_minus),
            exponent=pred.exponent, prefactor_power=_nan(pred.prefactor_power),
            log_prefactor=pred.log_prefactor, log_abs_g=math.log(abs(g)) if g else -math.inf,
            warnings=pred.warnings + p.warnings,
        ))
    return rows, f"{len(rows)} predictions", len(rows) == 1


def _nan(x):
    return math.nan if x is None else x


def cmd_oracle(cfg: RunConfig):
    rows = []
    for p in cfg.points():
        spec = ChainSpec(cfg.L, p.h, p.T)
        site1, site2 = center_sites(cfg.L, p.n)
        ged = ed_correlator(spec, site1, site2, p.t)
        g = assemble(p, _grid(cfg, p)).g
        rows.append(dict(
            n=p.n, t=p.t, h=p.h, T=p.T, L=cfg.L, site1=site1, site2=site2,
            g_ed_re=ged.real, g_ed_im=ged.imag, abs_g_ed=abs(ged),
            g_re=g.real, g_im=g.imag, abs_g=abs(g), rel_dev=abs(abs(g) - abs(ged)) / abs(ged),
            warnings=p.warnings + [SIGN_NOTE],
        ))
    worst = max(r["rel_dev"] for r in rows)
    return rows, f"max relative |g| deviation {worst:.3e}", False


def cmd_converge(cfg: RunConfig):
    grids = cfg.grids or [128, 256, 512]
    rows = []
    for p in cfg.points():
        prev = None
        for size in grids:
            ps = assemble(p, CircleGrid(size))
            row = dict(n=p.n, t=p.t, h=p.h, T=p.T, N=size,
                       sigma_re=ps.sigma.real, sigma_im=ps.sigma.imag, g_re=ps.g.real, g_im=ps.g.imag)
            if prev is None:
                row["delta_sigma"], row["delta_g"] = math.nan, math.nan
            else:
                ds = ps.sigma - prev.sigma
                ds -= 2j * math.pi * round(ds.imag / (2 * math.pi)) if math.isfinite(ds.imag) else 0
                row["delta_sigma"] = abs(ds) if not ps.singular else math.nan
                row["delta_g"] = abs(ps.g - prev.g)
            row["warnings"] = list(ps.warnings)
            rows.append(row)
            prev = ps
    last = rows[-1]
    return rows, f"last |delta g| = {last['delta_g']:.3e}", False


COMMANDS = {
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "verify-al": cmd_verify_al,
    "verify-tau": cmd_verify_tau,
    "asym": cmd_asym,
    "oracle": cmd_oracle,
    "converge": cmd_converge,
}

DEFAULT_FORMAT = {"eval": "json", "asym": "json"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xxcorr", description="XX chain temperature correlators via a Fredholm determinant")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--n", required=True, help="site separation: value, list a,b or range a:b[:step]")
        sp.add_argument("--t", default="0", help="time separation (value, list or range)")
        sp.add_argument("--h", default="0", help="transverse field (value, list or range)")
        sp.add_argument("--T", required=True, help="temperature (value, list or range)")
        sp.add_argument("--grid", type=int, default=None, help="quadrature nodes (default: heuristic, min 128)")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default=None)
        if name.startswith("verify"):
            sp.add_argument("--fd-step", type=float, default=1e-3)
        if name == "converge":
            sp.add_argument("--grids", default="128,256,512")
        if name == "oracle":
            sp.add_argument("--L", type=int, default=12, help="chain length for exact diagonalisation")
    return parser


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=ns.command,
        n=_parse_range(ns.n, int),
        t=_parse_range(ns.t),
        h=_parse_range(ns.h),
        T=_parse_range(ns.T),
        grid_size=ns.grid,
        fd_step=getattr(ns, "fd_step", 1e-3),
        output_path=ns.out,
        format=ns.format or DEFAULT_FORMAT.get(ns.command, "csv"),
        grids=_parse_range(ns.grids, int) if hasattr(ns, "grids") else [],
        L=getattr(ns, "L", 12),
    )
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> int:
    rows, summary, single = COMMANDS[cfg.command](cfg)
    text = render(rows, cfg.format, single=single, warnings=_collect_warnings(rows))
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{cfg.command}: {summary}", file=sys.stderr if not cfg.output_path else sys.stdout)
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except (ArgumentError, DomainError) as exc:
        print(f"xxcorr: error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except DomainError as exc:
        print(f"xxcorr: error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"xxcorr: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
