"""Command-line front end: ``dmtlab {analyze,dmt,simulate,detnet}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .detlift import LiftError, det_min_cut_rank, derive_deterministic, lift_to_fading, mmg
from .dmt import CurveError, DmtCurve, line, rayleigh_mimo_dmt
from .montecarlo import DEFAULT_LADDER_DB, ImportanceSampling, estimate_diversity
from .network import (CutEnumerationError, NetworkError, NetworkGraph, edge_disjoint_paths,
                      find_cycle, load_network, max_flow, network_is_acyclic,
                      path_has_shortcut, path_nodes)
from .poly import PolyMatrix, rayleigh_block
from .protocols import (InducedChannel, ProtocolInfeasible, ScheduleError, edge_disjoint_protocol,
                        fd_linear_protocol, gen_naf_bound, mimo_naf, mimo_naf_channel, naf_n_relay,
                        naf_n_relay_bound, naf_single, saf_bound, saf_matrix)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3
PROTOCOLS = ("naf", "naf-n", "saf", "mimo-naf", "gen-naf", "edge-disjoint", "fd-linear")
SIM_CHANNELS = PROTOCOLS[:4] + ("edge-disjoint", "fd-linear", "rayleigh", "parallel")


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    net: str | None = None
    protocol: str = "naf"
    seed: int = 42
    trials: int = 1_000_000
    rho_db: list = field(default_factory=lambda: list(DEFAULT_LADDER_DB))
    r_grid: float = 0.01
    r: float = 0.5
    out: str | None = None
    relays: int = 1
    cycles: int = 1
    slots: str | None = None
    fractions: str = "optimize"
    antennas: str | None = None
    product_curve: str | None = None
    direct_curve: str | None = None
    relay_curves: str | None = None
    branches: int = 2
    importance: float | None = None
    colored: bool = False
    threshold: float = 1e-9

    def validate(self):
        for name in ("trials", "relays", "cycles", "branches"):
            if getattr(self, name) < 1:
                raise InputError(f"--{name.replace('_', '-')} must be positive")
        if self.r_grid <= 0 or self.threshold <= 0:
            raise InputError("--r-grid and --threshold must be positive")
        if self.r < 0:
            raise InputError("--r must be nonnegative")


def _parse_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmtlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default option values")
    common.add_argument("--net", help="network description (JSON)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--r-grid", type=float, dest="r_grid", help="export grid step in r")

    sub.add_parser("analyze", parents=[common], help="min-cut diversity, MMG, structure checks")

    p = sub.add_parser("dmt", parents=[common], help="analytic protocol DMT curves")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--relays", type=int, help="number of relays N")
    p.add_argument("--cycles", type=int, help="SAF cycles k (M = kN + 1)")
    p.add_argument("--slots", help="fd-linear slots per path T, or 'inf'")
    p.add_argument("--fractions", help="gen-naf activation fractions 'a,b,..' or 'optimize'")
    p.add_argument("--antennas", help="mimo-naf antennas n_s,n_r,n_d")
    p.add_argument("--product-curve", dest="product_curve", help="mimo-naf product-channel curve")
    p.add_argument("--direct-curve", dest="direct_curve", help="gen-naf direct-link curve")
    p.add_argument("--relay-curves", dest="relay_curves", help="gen-naf relay curves, ';'-separated")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo outage and slope fit")
    p.add_argument("--protocol", choices=SIM_CHANNELS)
    p.add_argument("--r", type=float, help="multiplexing gain")
    p.add_argument("--rho-db", dest="rho_db", help="SNR ladder in dB, comma-separated")
    p.add_argument("--trials", type=int, help="trials per SNR point")
    p.add_argument("--relays", type=int)
    p.add_argument("--cycles", type=int)
    p.add_argument("--slots")
    p.add_argument("--antennas", help="antennas n_s,n_r,n_d (mimo-naf) or m,n (rayleigh)")
    p.add_argument("--branches", type=int, help="parallel branches")
    p.add_argument("--importance", type=float, help="importance-sampling exponent beta")
    p.add_argument("--colored", action="store_const", const=True,
                   help="ignore the relay-noise covariance (white-noise surrogate)")

    p = sub.add_parser("detnet", parents=[common], help="finite-field deterministic lift")
    p.add_argument("--threshold", type=float, help="relative singular-value threshold")
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags override the config file, which overrides the defaults."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        for k, v in data.items():
            k = k.replace("-", "_")
            if k not in known:
                raise InputError(f"unknown config key {k!r}")
            setattr(cfg, k, v)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.command = args.command
    cfg.rho_db = _parse_list(cfg.rho_db)
    if cfg.fractions is not None and not isinstance(cfg.fractions, str):
        cfg.fractions = ",".join(str(x) for x in cfg.fractions)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# output

def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"not serialisable: {type(x)}")


def _emit(cfg: RunConfig, stem: str, payload: dict, csv: str | None = None,
          plot: str | None = None) -> None:
    payload = {"command": cfg.command, "seed": cfg.seed, **payload}
    text = _dump(payload)
    if cfg.out is None:
        sys.stdout.write(text)
        if csv is not None:
            sys.stdout.write(csv)
        return
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(text)
    if csv is not None:
        (out / f"{stem}.csv").write_text(csv)
    if plot is not None:
        (out / f"{stem}.gp").write_text(plot)
    sys.stdout.write(f"wrote {out / stem}.*\n")


def _curve_plot(stem: str, title: str, seed: int) -> str:
    return (f"# gnuplot script seed={seed}\nset datafile separator ','\nset title '{title}'\n"
            "set xlabel 'multiplexing gain r'\nset ylabel 'diversity d(r)'\n"
            f"plot '{stem}.csv' using 1:2 every ::1 with lines title 'd(r)'\n")


def _outage_plot(stem: str, title: str, seed: int) -> str:
    return (f"# gnuplot script seed={seed}\nset datafile separator ','\nset logscale y\n"
            f"set title '{title}'\nset xlabel 'SNR (dB)'\nset ylabel 'P_out'\n"
            f"plot '{stem}.csv' using 1:2:3 every ::1 with yerrorbars title 'outage'\n")


def _load_net(cfg: RunConfig) -> NetworkGraph:
    if not cfg.net:
        raise InputError("--net is required")
    try:
        return load_network(cfg.net)
    except OSError as exc:
        raise InputError(f"cannot read {cfg.net}: {exc}") from exc


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze(cfg: RunConfig) -> dict:
    net = _load_net(cfg)
    source, sink = net.terminals()
    flow = max_flow(net)
    report = {"network": cfg.net, "nodes": len(net.nodes), "edges": len(net.edges),
              "full_duplex": net.is_full_duplex(), "diversity": flow.value,
              "disconnected": flow.disconnected}
    if flow.disconnected:
        report["diagnosis"] = "disconnected: sink unreachable from source"
        report["mmg"] = 0
    else:
        res = mmg(net, seed=cfg.seed)
        report["mmg"] = res.value
        report["mmg_upper_bound_only"] = not net.is_full_duplex()
        report["cuts"] = [{"source_side": sorted(d.cut.source_side),
                           "crossing_edges": len(d.cut.crossing_edges), "rank": d.rank}
                          for d in res.details]
        report["paths"] = [path_nodes(net, p) for p in flow.paths]
        report["path_lengths"] = [len(p) for p in flow.paths]
    cycle = find_cycle(net)
    report["acyclic"] = cycle is None
    if cycle:
        report["cycle"] = cycle
    if not flow.disconnected:
        report["shortcuts"] = [path_has_shortcut(net, p) for p in flow.paths]
    if net.is_single_antenna() and not flow.disconnected:
        fd_ok = report["acyclic"] or not any(report["shortcuts"])
        report["fd_linear_applicable"] = fd_ok and net.is_full_duplex()
    report["summary"] = {"diversity": report["diversity"], "mmg": report["mmg"],
                         "line": (f"{report['diversity']}(1 - r/{report['mmg']})^+"
                                  if report["mmg"] else "0")}
    _emit(cfg, "analyze", report)
    return report


# ---------------------------------------------------------------------------
# dmt

def parse_curve(spec: str) -> DmtCurve:
    """``line:d0:rmax``, ``mimo:m:n``, ``points:r,d;r,d;...`` or a curve JSON file."""
    try:
        if spec.startswith("line:"):
            _, d0, rmax = spec.split(":")
            return line(Fraction(d0), Fraction(rmax))
        if spec.startswith("mimo:"):
            _, m, n = spec.split(":")
            return rayleigh_mimo_dmt(int(m), int(n))
        if spec.startswith("points:"):
            pts = [tuple(Fraction(v) for v in p.split(",")) for p in spec[7:].split(";")]
            return DmtCurve(tuple(pts))
        return DmtCurve.from_json(json.loads(Path(spec).read_text()))
    except (OSError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"bad curve {spec!r}: {exc}") from exc


def _antennas(cfg: RunConfig, n: int) -> list[int]:
    if cfg.antennas is None:
        return [1] * n
    vals = [int(x) for x in _parse_list(cfg.antennas)]
    if len(vals) != n or min(vals) < 1:
        raise InputError(f"--antennas needs {n} positive integers")
    return vals


def _slots(cfg: RunConfig) -> int | None:
    if cfg.slots is None or str(cfg.slots).lower() in ("inf", "infinity"):
        return None
    try:
        return int(cfg.slots)
    except ValueError as exc:
        raise InputError(f"bad --slots {cfg.slots!r}") from exc


def protocol_curve(cfg: RunConfig) -> tuple[DmtCurve, dict]:
    proto, extra = cfg.protocol, {}
    if proto == "naf":
        return naf_single()[1], extra
    if proto == "naf-n":
        return naf_n_relay_bound(cfg.relays), {"relays": cfg.relays}
    if proto == "saf":
        m = cfg.cycles * cfg.relays + 1
        return saf_bound(cfg.relays, m), {"relays": cfg.relays, "slots": m}
    if proto == "mimo-naf":
        n_s, n_r, n_d = _antennas(cfg, 3)
        prod = parse_curve(cfg.product_curve) if cfg.product_curve else line(1, 1)
        return mimo_naf(n_s, n_r, n_d, prod), {"antennas": [n_s, n_r, n_d]}
    if proto == "gen-naf":
        direct = parse_curve(cfg.direct_curve or "line:1:1")
        relays = [parse_curve(s) for s in (cfg.relay_curves or "line:1:1").split(";")]
        fr = cfg.fractions or "optimize"
        fracs = "optimize" if fr == "optimize" else [Fraction(x) for x in str(fr).split(",")]
        res = gen_naf_bound(direct, relays, fracs)
        if res.fractions:
            extra["fractions"] = [{"r": r, "f": list(f)} for r, f in res.fractions]
        return res.curve, extra
    if proto in ("edge-disjoint", "fd-linear"):
        net = _load_net(cfg)
        if proto == "edge-disjoint":
            run = edge_disjoint_protocol(net)
        else:
            run = fd_linear_protocol(net, _slots(cfg))
            extra["condition"] = run.condition
            extra["limit"] = run.limit_curve.to_json()
        extra["paths"] = [path_nodes(net, p) for p in run.paths]
        if run.schedule is not None:
            extra["schedule"] = run.schedule.to_json()
        return run.curve, extra
    raise InputError(f"unknown protocol {proto!r}")


def cmd_dmt(cfg: RunConfig) -> dict:
    curve, extra = protocol_curve(cfg)
    payload = {"protocol": cfg.protocol, "curve": curve.to_json(), **extra}
    stem = f"dmt_{cfg.protocol}"
    _emit(cfg, stem, payload, curve.to_csv(cfg.r_grid, f"seed={cfg.seed} protocol={cfg.protocol}"),
          _curve_plot(stem, cfg.protocol, cfg.seed))
    return payload


# ---------------------------------------------------------------------------
# simulate

def simulation_channel(cfg: RunConfig) -> InducedChannel:
    proto = cfg.protocol
    if proto == "naf":
        return naf_single()[0]
    if proto == "naf-n":
        return naf_n_relay(cfg.relays)
    if proto == "saf":
        return saf_matrix(cfg.relays, cfg.cycles)
    if proto == "mimo-naf":
        return mimo_naf_channel(*_antennas(cfg, 3))
    if proto == "edge-disjoint":
        return edge_disjoint_protocol(_load_net(cfg)).channel
    if proto == "fd-linear":
        t = _slots(cfg)
        if t is None:
            raise InputError("simulation of fd-linear needs a finite --slots")
        return fd_linear_protocol(_load_net(cfg), t).channel
    if proto == "rayleigh":
        m, n = _antennas(cfg, 2)
        return InducedChannel(rayleigh_block(n, m, "h"), (), 1, 1)
    if proto == "parallel":
        ent = {(i, i): f"h{i}" for i in range(cfg.branches)}
        rows = [[ent.get((i, j), 0) for j in range(cfg.branches)] for i in range(cfg.branches)]
        return InducedChannel(PolyMatrix.from_rows(rows), (), 1, 1)
    raise InputError(f"unknown channel {proto!r}")


def cmd_simulate(cfg: RunConfig) -> dict:
    ic = simulation_channel(cfg)
    imp = None if cfg.importance is None else ImportanceSampling(cfg.importance)
    est = estimate_diversity(ic, cfg.r, cfg.rho_db, cfg.trials, cfg.seed,
                             whiten=not cfg.colored, importance=imp)
    payload = {"protocol": cfg.protocol, "estimate": est.to_json()}
    stem = f"simulate_{cfg.protocol}"
    _emit(cfg, stem, payload, est.to_csv(), _outage_plot(stem, cfg.protocol, cfg.seed))
    return payload


# ---------------------------------------------------------------------------
# detnet

def cmd_detnet(cfg: RunConfig) -> dict:
    net = _load_net(cfg)
    d = derive_deterministic(net, seed=cfg.seed)
    rank = det_min_cut_rank(d)
    lift = lift_to_fading(d, net, cfg.threshold)
    m = mmg(net, seed=cfg.seed)
    payload = {"deterministic": d.to_json(), "mmg": m.value, "det_min_cut_rank": rank.value,
               "lifted_rank": lift.rank, "witness_rank": lift.witness_rank,
               "lift_ok": lift.ok,
               "ill_conditioned_cuts": [sorted(c.source_side) for c in lift.ill_conditioned],
               "cuts": [{"source_side": sorted(c.source_side), "det_rank": r,
                         "numeric_rank": n, "exact_rank": e}
                        for (c, r), (_, n, e) in zip(rank.per_cut, lift.per_cut)]}
    _emit(cfg, "detnet", payload)
    return payload


COMMANDS = {"analyze": cmd_analyze, "dmt": cmd_dmt, "simulate": cmd_simulate,
            "detnet": cmd_detnet}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[cfg.command](cfg)
    except (ProtocolInfeasible, CutEnumerationError, LiftError) as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (InputError, NetworkError, ScheduleError, CurveError, ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
