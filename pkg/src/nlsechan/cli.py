"""Command-line front end: sweeps, figure data, simulation, validation.

One binary, one JSON config schema.  Tables go out as CSV with a comment
line recording the config hash and seed; the validate subcommand emits a
machine-readable key=value report and a nonzero exit code on failure.
Everything is deterministic given (config, seed); the thread count never
changes results.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import channels, mi_mc, nlse, specfun
from ._kernels import BACKEND
from .params import ConfigError, ParameterError, load_config, standard_link

_DEFAULT_GRID = {"m_meaning": 32, "oversampling": 4}
_DEFAULT_PROP = {"n_steps": 1000, "scheme": "strang"}

MODELS = ("shannon", "dispersive", "nondispersive_exact", "nondispersive_expansion")


@dataclass(frozen=True)
class SweepSpec:
    """A validated snr sweep: grid in dB, model list, optional bt override."""

    snr_dbs: tuple
    models: tuple
    beta_tilde: float | None = None

    def __post_init__(self):
        if len(self.snr_dbs) < 1:
            raise ConfigError("sweep grid must be non-empty")
        if any(b <= a for a, b in zip(self.snr_dbs, self.snr_dbs[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        if not self.models:
            raise ConfigError("sweep needs at least one model")
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ConfigError(f"unknown models: {sorted(bad)}; valid: {MODELS}")


def _resolve_threads(args) -> int:
    env = os.environ.get("NLSECHAN_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads)


def _load(args) -> dict:
    if args.config:
        return load_config(args.config)
    return {"channel": standard_link(), "grid": dict(_DEFAULT_GRID),
            "propagation": dict(_DEFAULT_PROP), "raw": {"channel": "standard_link"}}


def _config_hash(cfg) -> str:
    blob = json.dumps(cfg["raw"], sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


class _Sink:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", encoding="utf-8") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()
        return False


def _write_table(args, cfg, header, rows):
    with _Sink(args.out) as fh:
        fh.write(f"# config={_config_hash(cfg)} seed={args.seed}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(c) for c in row) + "\n")


def _with_beta_tilde(phys, beta_tilde):
    """Same link with beta rescaled to hit the requested beta_tilde."""
    from dataclasses import replace
    return replace(phys, beta=beta_tilde / (phys.length * phys.bandwidth**2))


def _parse_grid_arg(args):
    if args.bt is not None:
        return [float(v) for v in args.bt.split(",")]
    if args.bt_spacing == "log":
        if args.bt_min <= 0:
            raise ConfigError("--bt-min must be > 0 for log spacing")
        return list(np.geomspace(args.bt_min, args.bt_max, args.bt_points))
    return list(np.linspace(args.bt_min, args.bt_max, args.bt_points))


# ---------------------------------------------------------------------------
# subcommands


def cmd_gfun(args, cfg):
    methods = [m.strip() for m in args.methods.split(",")]
    known = {"series", "cubature", "asymptotic", "exact"}
    bad = set(methods) - known
    if bad:
        raise ConfigError(f"unknown gfun methods: {sorted(bad)}")
    header = ["beta_tilde"]
    for m in methods:
        header += [f"g_{m}", f"err_{m}"]
    header.append("status")
    rows = []
    for bt in _parse_grid_arg(args):
        row = [bt]
        status = []
        for m in methods:
            try:
                if m == "series":
                    ev = specfun.g_series(bt)
                elif m == "cubature":
                    ev = specfun.g_cubature(bt, specfun.cubature_nodes_for(bt))
                elif m == "asymptotic":
                    ev = specfun.g_asymptotic(bt)
                else:
                    ev = specfun.g_eval(bt)
                row += [ev.value, ev.err_estimate]
            except Exception as exc:  # row marked, run continues
                row += ["", ""]
                status.append(f"{m}:{type(exc).__name__}")
        row.append("ok" if not status else ";".join(status))
        rows.append(row)
    _write_table(args, cfg, header, rows)
    return 0


_MODEL_NAMES = {"dispersive": "dispersive_perturbative"}


def _sweep_rows(phys, snr_dbs, models, beta_tilde=None):
    bt = (beta_tilde if beta_tilde is not None
          else phys.beta * phys.length * phys.bandwidth**2)
    g = channels._g_cached(float(bt)).value if "dispersive" in models else None
    rows = []
    for db in snr_dbs:
        snr = 10.0 ** (db / 10.0)
        gt = channels.gamma_tilde_of_snr(phys, snr)
        row = [db, snr, gt]
        status = []
        for m in models:
            try:
                pt = channels.evaluate_se(_MODEL_NAMES.get(m, m), snr, gt,
                                          beta_tilde=bt, g_value=g)
                row.append(pt.se_nats)
            except Exception as exc:
                row.append("")
                status.append(f"{m}:{type(exc).__name__}")
        row.append("ok" if not status else ";".join(status))
        rows.append(row)
    return rows


def cmd_sweep(args, cfg):
    if args.snr_db_max <= args.snr_db_min or args.points < 2:
        raise ConfigError("need snr_db_max > snr_db_min and points >= 2")
    spec = SweepSpec(
        snr_dbs=tuple(np.linspace(args.snr_db_min, args.snr_db_max, args.points)),
        models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
        beta_tilde=args.beta_tilde)
    phys = cfg["channel"]
    phys_bt = _with_beta_tilde(phys, spec.beta_tilde) if spec.beta_tilde is not None else phys
    rows = _sweep_rows(phys_bt, spec.snr_dbs, spec.models, beta_tilde=spec.beta_tilde)
    header = ["snr_db", "snr", "gamma_tilde"] + [f"se_{m}" for m in spec.models] + ["status"]
    _write_table(args, cfg, header, rows)
    return 0


def cmd_crossover(args, cfg):
    phys = cfg["channel"]
    bts = ([float(v) for v in args.beta_tilde.split(",")] if args.beta_tilde
           else [phys.beta * phys.length * phys.bandwidth**2])
    rows = []
    for bt in bts:
        link = _with_beta_tilde(phys, bt)
        try:
            pt = channels.crossover_snr(link)
            rows.append([bt, pt.db, pt.linear, "ok"])
        except (channels.NoBracketError, ValueError) as exc:
            rows.append([bt, "", "", f"{type(exc).__name__}"])
    _write_table(args, cfg, ["beta_tilde", "crossover_db", "crossover_snr", "status"], rows)
    return 0


def cmd_simulate(args, cfg):
    phys = cfg["channel"]
    if args.snr_db is not None:
        phys = phys.with_snr(10.0 ** (args.snr_db / 10.0))
    if phys.signal_psd <= 0.0:
        raise ConfigError("simulate needs signal power: set snr_db/signal_psd_w_s "
                          "in the config or pass --snr-db")
    grid = nlse.make_grid(phys.bandwidth, cfg["grid"]["m_meaning"],
                          cfg["grid"]["oversampling"])
    prop = nlse.PropagationConfig(n_steps=cfg["propagation"]["n_steps"],
                                  scheme=cfg["propagation"]["scheme"], seed=args.seed)
    rng = np.random.default_rng((args.seed, 0))
    x = nlse.sample_gaussian_input(grid, phys.signal_psd, rng)
    out = nlse.propagate(x, phys, prop,
                         noise_q=phys.noise_psd if args.noise else None)
    if args.field_out:
        out.write_binary(args.field_out)
    if args.field_csv:
        out.write_csv(args.field_csv)
    with _Sink(args.out) as fh:
        fh.write(f"# config={_config_hash(cfg)} seed={args.seed}\n")
        for key, val in [
            ("m_total", grid.m_total),
            ("input_power_w", x.time_average_power()),
            ("output_power_w", out.time_average_power()),
            ("output_in_band_w", out.band_power(True)),
            ("output_out_of_band_w", out.band_power(False)),
            ("noise", int(bool(args.noise))),
        ]:
            fh.write(f"{key}={_fmt(val)}\n")
    return 0


def cmd_mi_mc(args, cfg):
    ch = mi_mc.PerSampleChannel.from_snr_gamma_tilde(
        10.0 ** (args.snr_db / 10.0), args.gamma_tilde)
    est = mi_mc.estimate_mi(ch, args.n_outer, args.n_inner, args.seed,
                            y_mode=args.y_mode, n_steps=args.n_steps,
                            threads=_resolve_threads(args))
    pen = channels.nondispersive_penalty(ch.gamma_tilde)
    with _Sink(args.out) as fh:
        fh.write(f"# config={_config_hash(cfg)} seed={args.seed}\n")
        for key, val in [
            ("snr", ch.snr), ("gamma_tilde", ch.gamma_tilde),
            ("y_mode", args.y_mode),
            ("mi_nats", est.mean), ("std_error", est.std_error),
            ("n_outer", est.n_samples), ("n_inner", args.n_inner),
            ("penalty_estimate", math.log(ch.snr) - est.mean),
            ("penalty_analytic", pen),
        ]:
            fh.write(f"{key}={_fmt(val)}\n")
    return 0


def cmd_figure(args, cfg):
    phys = cfg["channel"]
    if args.which == "fig1":
        args.bt = None
        args.bt_min, args.bt_max, args.bt_points, args.bt_spacing = 1.0, 2000.0, 50, "log"
        args.methods = "exact,asymptotic"
        return cmd_gfun(args, cfg)
    snr_dbs = np.linspace(0.0, 45.0, 91)
    if args.which == "fig2":
        models = ["shannon", "dispersive", "nondispersive_exact", "nondispersive_expansion"]
        rows = _sweep_rows(phys, snr_dbs, models)
        header = ["snr_db", "snr", "gamma_tilde"] + [f"se_{m}" for m in models] + ["status"]
        _write_table(args, cfg, header, rows)
        return 0
    # fig3: dispersive at the link's own dispersion and at 4x
    bt = phys.beta * phys.length * phys.bandwidth**2
    rows_a = _sweep_rows(phys, snr_dbs, ["shannon", "dispersive", "nondispersive_exact"])
    rows_b = _sweep_rows(_with_beta_tilde(phys, 4 * bt), snr_dbs, ["dispersive"],
                         beta_tilde=4 * bt)
    rows = [ra[:-1] + [rb[3], "ok"] for ra, rb in zip(rows_a, rows_b)]
    header = ["snr_db", "snr", "gamma_tilde", "se_shannon", "se_dispersive",
              "se_nondispersive_exact", "se_dispersive_4x", "status"]
    _write_table(args, cfg, header, rows)
    return 0


def cmd_validate(args, cfg):
    from .validate import run_suite
    fault = args.inject_fault
    report, ok = run_suite(args.suite, seed=args.seed, threads=_resolve_threads(args),
                           fault=fault, backend=BACKEND)
    with _Sink(args.out) as fh:
        fh.write(report)
    return 0 if ok else 1


# ---------------------------------------------------------------------------


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (channel/grid/propagation)")
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads (env NLSECHAN_THREADS overrides)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=["csv"], default="csv")

    p = argparse.ArgumentParser(prog="nlsechan",
                                description="Nonlinear fiber channel spectral-efficiency toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gfun", parents=[common], help="dispersion penalty function table")
    g.add_argument("--bt", help="comma-separated beta_tilde values")
    g.add_argument("--bt-min", type=float, default=1.0)
    g.add_argument("--bt-max", type=float, default=2000.0)
    g.add_argument("--bt-points", type=int, default=50)
    g.add_argument("--bt-spacing", choices=["log", "linear"], default="log")
    g.add_argument("--methods", default="exact,asymptotic",
                   help="comma list of series,cubature,asymptotic,exact")
    g.set_defaults(func=cmd_gfun)

    s = sub.add_parser("sweep", parents=[common], help="spectral efficiency vs snr")
    s.add_argument("--snr-db-min", type=float, default=0.0)
    s.add_argument("--snr-db-max", type=float, default=45.0)
    s.add_argument("--points", type=int, default=91)
    s.add_argument("--models", default=",".join(MODELS))
    s.add_argument("--beta-tilde", type=float, default=None,
                   help="override the link's beta_tilde (rescales beta)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("crossover", parents=[common],
                       help="dispersive vs nondispersive crossover snr")
    c.add_argument("--beta-tilde", default=None,
                   help="comma-separated beta_tilde overrides")
    c.set_defaults(func=cmd_crossover)

    sim = sub.add_parser("simulate", parents=[common], help="split-step channel run")
    sim.add_argument("--snr-db", type=float, default=None)
    sim.add_argument("--noise", action=argparse.BooleanOptionalAction, default=True)
    sim.add_argument("--field-out", help="binary field snapshot path")
    sim.add_argument("--field-csv", help="CSV field snapshot path")
    sim.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mi-mc", parents=[common],
                       help="Monte-Carlo per-sample mutual information")
    m.add_argument("--snr-db", type=float, default=30.0)
    m.add_argument("--gamma-tilde", type=float, default=0.5)
    m.add_argument("--n-outer", type=int, default=2000)
    m.add_argument("--n-inner", type=int, default=2000)
    m.add_argument("--n-steps", type=int, default=200)
    m.add_argument("--y-mode", choices=["sde", "analytic"], default="sde")
    m.set_defaults(func=cmd_mi_mc)

    v = sub.add_parser("validate", parents=[common], help="cross-method validation suite")
    v.add_argument("--suite", choices=["fast", "full"], default="fast")
    v.add_argument("--inject-fault", choices=["g-dispatch"], default=None,
                   help="negative control: misconfigure a check to prove it trips")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("figure", parents=[common], help="figure-data presets")
    f.add_argument("--which", choices=["fig1", "fig2", "fig3"], required=True)
    f.set_defaults(func=cmd_figure)
    return p


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        return args.func(args, cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # stdout consumer (head, less) went away; not an error
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
