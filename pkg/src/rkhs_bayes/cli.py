"""Command-line interface.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, experiments, lcurve, linalg, spectral, synth
from .assembly import RegressionSystem
from .errors import ConfigError, NumericalError

SEED_ENV = "RKHS_BAYES_SEED"

DEFAULTS = {
    "common": {"seed": None, "outdir": None, "threads": None, "tol": linalg.DEFAULT_TOL,
               "basis_size": synth.ConvolutionSetup().n_basis},
    "analyze": {"input": None},
    "toeplitz": {"table": 2, "reps": 100, "sigma": [0.1]},
    "sweep": {"scenario": "discretization", "mode": "discrete", "placement": "out",
              "sigma": list(experiments.DEFAULT_SIGMAS), "reps": 200, "dump_data": False},
    "bands": {"scenario": "discretization", "mode": "discrete", "placement": "out",
              "sigma": [1e-3], "samples": 1000},
    "divergence": {"beta": [0.0, 0.5, 1.0, 2.0], "c0": 1.0,
                   "sigma": list(experiments.DEFAULT_SIGMAS)},
    "lcurve": {"input": None, "scenario": "discretization", "mode": "discrete",
               "placement": "out", "sigma": [1e-3], "loss_constant": None},
}


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkhs-bayes",
                                description="Kernel learning with data-adaptive priors.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON config or run manifest")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--outdir", type=Path)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--basis-size", dest="basis_size", type=int)
        return sp

    def panel(sp):
        sp.add_argument("--scenario", choices=synth.SCENARIOS)
        sp.add_argument("--mode", choices=synth.MODES)
        sp.add_argument("--placement", choices=synth.PLACEMENTS)
        sp.add_argument("--sigma", type=_floats)

    sp = common(sub.add_parser("analyze", help="spectral report of a regression system"))
    sp.add_argument("--input", type=Path)

    sp = common(sub.add_parser("toeplitz", help="Toeplitz example reports"))
    sp.add_argument("--table", type=int, choices=(2, 3),
                    help="2: measures and spectra of three datasets; 3: prior comparison")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--sigma", type=_floats)

    sp = common(sub.add_parser("sweep", help="noise sweep of one panel"))
    panel(sp)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--dump-data", dest="dump_data", action="store_const", const=True)

    sp = common(sub.add_parser("bands", help="posterior bands for one replicate"))
    panel(sp)
    sp.add_argument("--samples", type=int)

    sp = common(sub.add_parser("divergence", help="small-noise rates of scaled priors"))
    sp.add_argument("--beta", type=_floats)
    sp.add_argument("--c0", type=float)
    sp.add_argument("--sigma", type=_floats)

    sp = common(sub.add_parser("lcurve", help="L-curve CSV"))
    panel(sp)
    sp.add_argument("--input", type=Path)
    sp.add_argument("--loss-constant", dest="loss_constant", type=float)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    cmd = args.command
    cfg = dict(DEFAULTS["common"], **DEFAULTS[cmd])
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if "config" in doc and "command" in doc:  # a run manifest
            if doc["command"] != cmd:
                raise ConfigError(f"manifest is for {doc['command']!r}, not {cmd!r}")
            doc = doc["config"]
        unknown = set(doc) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(doc)
    for key, val in vars(args).items():
        if key in cfg and val is not None:
            cfg[key] = val
    if cfg["seed"] is None:
        env = os.environ.get(SEED_ENV)
        try:
            cfg["seed"] = int(env) if env is not None else 0
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    for key in ("input", "outdir"):
        if cfg.get(key) is not None:
            cfg[key] = str(cfg[key])
    _validate(cmd, cfg)
    return cfg


def _validate(cmd, cfg):
    if cfg["tol"] <= 0 or cfg["tol"] >= 1:
        raise ConfigError("--tol must lie in (0, 1)")
    if cfg["basis_size"] < 4:
        raise ConfigError("--basis-size must be at least 4")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError("--threads must be positive")
    if cmd in ("sweep", "toeplitz") and cfg["reps"] < 1:
        raise ConfigError("--reps must be positive")
    if "sigma" in cfg and (not cfg["sigma"] or min(cfg["sigma"]) <= 0):
        raise ConfigError("--sigma values must be positive")
    if cmd in ("bands", "lcurve") and len(cfg["sigma"]) != 1:
        raise ConfigError(f"{cmd} takes a single --sigma value")
    if cmd == "analyze" and cfg["input"] is None:
        raise ConfigError("analyze requires --input")
    for key, allowed in (("scenario", synth.SCENARIOS), ("mode", synth.MODES),
                         ("placement", synth.PLACEMENTS)):
        if key in cfg and cfg[key] not in allowed:
            raise ConfigError(f"invalid {key} {cfg[key]!r}")


def _outdir(cfg) -> Path | None:
    if cfg["outdir"] is None:
        return None
    out = Path(cfg["outdir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(cfg, name: str, text: str):
    out = _outdir(cfg)
    if out is None:
        sys.stdout.write(text)
    else:
        (out / name).write_text(text)


def _problem(cfg):
    return synth.build_convolution_problem(synth.ConvolutionSetup(n_basis=cfg["basis_size"]))


def cmd_analyze(cfg):
    sys_ = RegressionSystem.load(cfg["input"])
    sys_, _ = sys_.pruned(cfg["tol"])
    fs = spectral.decompose(sys_.A, sys_.B, cfg["tol"])
    report = {"eigvals": fs.eigvals.tolist(), "K": fs.K,
              "range_residual": linalg.range_residual(sys_.A, sys_.b, cfg["tol"]),
              "trace": spectral.trace_LG(fs)}
    _emit(cfg, "analyze.json", json.dumps(report, indent=2) + "\n")


def cmd_toeplitz(cfg):
    if cfg["table"] == 2:
        rows = experiments.toeplitz_spectra(cfg["tol"])
        lines = ["data | rho | K | eigvals"]
        for r in rows:
            lines.append(f"{r['data']} | {np.round(r['rho'], 12).tolist()} | {r['K']} | "
                         f"{np.round(r['eigvals'], 10).tolist()}")
        print("\n".join(lines))
        out = _outdir(cfg)
        if out is not None:
            experiments.write_json(out / "table2.json", rows)
        return
    res = experiments.toeplitz_prior_comparison(cfg["reps"], cfg["sigma"][0], cfg["seed"])
    doc = res.to_json()
    text = json.dumps(doc, indent=2) + "\n"
    out = _outdir(cfg)
    if out is not None:
        (out / "table3.json").write_text(text)
    sys.stdout.write(text)


def cmd_sweep(cfg):
    scen = synth.ErrorScenario.make(cfg["scenario"], cfg["mode"])
    out = _outdir(cfg)
    dump = None
    if cfg["dump_data"]:
        if out is None:
            raise ConfigError("--dump-data requires --outdir")
        dump = out / "data" / f"{cfg['scenario']}_{cfg['mode']}_{cfg['placement']}"
    res = experiments.run_noise_sweep(scen, cfg["placement"], cfg["sigma"], cfg["reps"],
                                      cfg["seed"], problem=_problem(cfg),
                                      threads=cfg["threads"], tol=cfg["tol"], dump_dir=dump)
    _emit(cfg, res.filename(), res.to_csv())


def cmd_bands(cfg):
    scen = synth.ErrorScenario.make(cfg["scenario"], cfg["mode"])
    res = experiments.run_posterior_bands(scen, cfg["placement"], cfg["sigma"][0],
                                          cfg["samples"], cfg["seed"], _problem(cfg),
                                          cfg["tol"])
    _emit(cfg, f"bands_{cfg['scenario']}.csv", res.to_csv())


def cmd_divergence(cfg):
    table = experiments.run_divergence_rates(cfg["beta"], cfg["c0"], cfg["seed"],
                                             cfg["sigma"])
    _emit(cfg, "divergence.csv", experiments.divergence_csv(table))


def cmd_lcurve(cfg):
    if cfg["input"] is not None:
        sys_, _ = RegressionSystem.load(cfg["input"]).pruned(cfg["tol"])
    else:
        prob = _problem(cfg)
        scen = synth.ErrorScenario.make(cfg["scenario"], cfg["mode"])
        ss = np.random.SeedSequence(cfg["seed"]).spawn(2)
        spec = synth.TrueKernelSpec(cfg["placement"])
        c = synth.sample_true_kernel(spec, prob.fsoi("discrete", cfg["tol"]),
                                     prob.basis.size, ss[0])
        if cfg["placement"] == "in":
            full = np.zeros(prob.basis.size)
            full[prob.kept] = c
            c = full
        data = synth.gen_convolution_dataset(prob, scen, c, cfg["sigma"][0], ss[1])
        sys_ = prob.system(cfg["mode"], data.f, cfg["sigma"][0])
    lc = lcurve.curve_points(sys_, None, cfg["loss_constant"], cfg["tol"])
    _emit(cfg, "lcurve.csv", lc.to_csv())


COMMANDS = {"analyze": cmd_analyze, "toeplitz": cmd_toeplitz, "sweep": cmd_sweep,
            "bands": cmd_bands, "divergence": cmd_divergence, "lcurve": cmd_lcurve}


def write_manifest(cfg, command):
    out = _outdir(cfg)
    if out is None:
        return
    doc = {"tool": "rkhs_bayes", "version": __version__, "command": command,
           "seed": cfg["seed"], "config": cfg}
    (out / "run_manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
        write_manifest(cfg, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
