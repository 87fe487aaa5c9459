"""``tapt`` command line.

Every subcommand takes ``--config FILE`` (JSON object, or ``key=value`` lines
with ``#`` comments); flags given on the command line override the file.
Keys are the flag names with dashes turned into underscores.

Each CSV written starts with ``# tapt <version> config_digest=<hex>``. The
digest covers the resolved configuration minus output paths and the worker
count, so the same experiment run with any number of workers yields the same
bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (
    ConfigError, DimensionError, DomainError, FormatError, GeometryError, LayoutError,
    NumericError, SizeError, TrainingDivergedError,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# keys that never change results
_VOLATILE = {"workers", "config"}

_FLOAT_FMT = "{:.12g}"


def _opt(name, type=str, default=None, help=None, **kw):
    return (name, dict(type=type, default=default, help=help, **kw))


def _flag(name, help=None):
    return (name, dict(action="store_const", const=True, default=False, help=help))


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


_LADDER = [
    _opt("--replicas", int, 8, "number of replicas"),
    _opt("--beta-min", float, 0.1),
    _opt("--beta-max", float, 3.0),
    _opt("--ladder", str, "geometric", "geometric, linear or adaptive"),
    _opt("--ladder-file", str, None, "read the ladder from a file (overrides the above)"),
]

_RUN = [
    _opt("--problem", str, None, "e.g. grid2d:L=16  ea3d:L=4,seed=0  factor:n=4,C=143"),
    *_LADDER,
    _opt("--sweeps-per-move", int, 5, "Gibbs sweeps M after each global move"),
    _opt("--global-moves", int, 30, "number of global moves N_swap"),
    _opt("--augmented", int, 0, "generator-augmented replicas N_T (hottest first)"),
    _opt("--context-fraction", float, 0.0),
    _flag("--mh-corrected", "multiply the acceptance by q(current)/q(proposal)"),
    _opt("--checkpoint", str, None, "generator checkpoint"),
    _opt("--repetitions", int, 1),
    _opt("--seed", int, 0),
    _opt("--workers", int, 1),
    _opt("--ground-energy", float, None, "reference ground energy for residuals"),
]

COMMANDS = {
    "sample": ("Record Gibbs samples into a dataset file.", [
        _opt("--problem", str, None),
        _opt("--betas", _floats, None, "comma-separated inverse temperatures"),
        _opt("--per-beta", int, 1000),
        _opt("--mixing-sweeps", int, 1000),
        _opt("--thinning", int, 10),
        _opt("--chains", int, 1),
        _opt("--init", str, "random"),
        _opt("--seed", int, 0),
        _opt("--out", str, None, "dataset file (ISFD1)"),
        _opt("--summary-out", str, None, "per-beta summary CSV (default stdout)"),
    ]),
    "train": ("Train a generator on a dataset.", [
        _opt("--dataset", str, None),
        _opt("--problem", str, None, "fixes the token layout (default: all spins free)"),
        _opt("--d-model", int, 64),
        _opt("--heads", int, 2),
        _opt("--ffn-dim", int, 128),
        _opt("--layers", int, 2),
        _opt("--lr", float, 1e-3),
        _opt("--batch-size", int, 64),
        _opt("--epochs", int, 50),
        _opt("--val-fraction", float, 0.1),
        _opt("--patience", int, None),
        _opt("--seed", int, 0),
        _opt("--resume", str, None, "continue from this checkpoint"),
        _opt("--out", str, None, "checkpoint file (ISFW1)"),
        _opt("--loss-out", str, None, "per-epoch loss CSV (default stdout)"),
    ]),
    "exact": ("Exact thermodynamics of an open grid, with optional sampled estimates.", [
        _opt("--problem", str, None, "grid2d problem"),
        _opt("--betas", _floats, None),
        _opt("--gibbs-samples", int, 0, "samples per integration point for a Gibbs estimate"),
        _opt("--checkpoint", str, None, "add a generator estimate"),
        _opt("--generator-samples", int, 200),
        _opt("--segments", int, 25),
        _opt("--seed", int, 0),
        _opt("--out", str, None),
    ]),
    "run": ("PT or TAPT over repetitions.", [
        *_RUN,
        _flag("--compare-pt", "also run PT with paired seeds and report wins"),
        _opt("--trace-out", str, None, "trace CSV (one file per repetition when > 1)"),
        _opt("--out", str, None, "per-repetition summary CSV (default stdout)"),
    ]),
    "ablate": ("Context, N_T and M ablations around a base setting.", [
        *_RUN,
        _opt("--contexts", _floats, "0,0.25,0.5,1"),
        _opt("--augmented-grid", _ints, None),
        _opt("--sweeps-grid", _ints, "0,1,10"),
        _opt("--out", str, None),
    ]),
    "factorize": ("Paired PT/TAPT factorization of semiprimes.", [
        _opt("--bits", int, 4, "factor width n"),
        _opt("--products", _ints, None, "default: every semiprime of the width"),
        *[o for o in _RUN if o[0] != "--problem"],
        _opt("--out", str, None),
    ]),
    "ladder": ("Build a beta ladder file.", [
        _opt("--problem", str, None),
        *_LADDER[:4],
        _opt("--target-acceptance", float, 0.3),
        _opt("--probe-sweeps", int, 200),
        _opt("--seed", int, 0),
        _opt("--out", str, None),
    ]),
}


_SUBPARSERS: dict[str, argparse.ArgumentParser] = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tapt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tapt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _SUBPARSERS[name] = p
        p.add_argument("--config", default=None, help="JSON or key=value file")
        for flag, kw in opts:
            kw = dict(kw)
            kw["default"] = argparse.SUPPRESS
            if kw.get("action") is None:
                kw.setdefault("metavar", flag.lstrip("-").upper().replace("-", "_"))
            p.add_argument(flag, **kw)
    return parser


def _defaults(command: str) -> dict:
    out = {}
    for flag, kw in COMMANDS[command][1]:
        key = flag.lstrip("-").replace("-", "_")
        d = kw.get("default")
        if isinstance(d, str) and kw.get("type") in (_floats, _ints):
            d = kw["type"](d)
        out[key] = d
    return out


def read_config(path) -> dict:
    """JSON object or ``key=value`` lines; values of the latter are parsed as JSON when possible."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON in {path}: {exc}") from None
        return {str(k).replace("-", "_"): v for k, v in data.items()}
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        k, v = (x.strip() for x in line.split("=", 1))
        try:
            out[k.replace("-", "_")] = json.loads(v)
        except json.JSONDecodeError:
            out[k.replace("-", "_")] = v
    return out


def resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = _defaults(command)
    explicit = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        for k, v in read_config(args.config).items():
            if k not in cfg:
                raise ConfigError(f"unknown config key {k!r} for {command}")
            kind = dict(COMMANDS[command][1])["--" + k.replace("_", "-")].get("type")
            if kind in (_floats, _ints) and isinstance(v, (str, int, float)):
                v = kind(str(v))
            cfg[k] = v
    cfg.update(explicit)
    cfg["command"] = command
    return cfg


def config_digest(cfg: dict) -> str:
    keep = {k: v for k, v in cfg.items()
            if k not in _VOLATILE and not k.endswith("out") and k != "out"}
    blob = json.dumps(keep, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header(cfg: dict) -> str:
    return f"tapt {__version__} config_digest={config_digest(cfg)}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _FLOAT_FMT.format(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header: str, columns, rows) -> None:
    """RFC-4180 rows (CRLF) preceded by one ``#`` provenance line."""
    buf = io.StringIO(newline="")
    buf.write(f"# {header}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    data = buf.getvalue()
    if path is None:
        sys.stdout.write(data.replace("\r\n", "\n"))
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)


def _need(cfg: dict, *keys) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, [], "")]
    if missing:
        raise ConfigError("missing required setting(s): "
                          + ", ".join("--" + k.replace("_", "-") for k in missing))


def _positive(cfg: dict, *keys) -> None:
    for k in keys:
        v = cfg.get(k)
        if v is None or v <= 0:
            raise ConfigError(f"--{k.replace('_', '-')} must be positive, got {v}")


def _check_file(path, what: str) -> None:
    if path is not None and not Path(path).is_file():
        raise ConfigError(f"{what} {path} does not exist")


def _ladder(cfg: dict, graph):
    from .tempering import BetaLadder, adaptive_ladder
    from .experiments import derive_seed

    if cfg.get("ladder_file"):
        _check_file(cfg["ladder_file"], "ladder file")
        return BetaLadder.read(cfg["ladder_file"])
    kind = cfg.get("ladder", "geometric")
    if kind == "geometric":
        return BetaLadder.geometric(cfg["beta_min"], cfg["beta_max"], cfg["replicas"])
    if kind == "linear":
        return BetaLadder.linear(cfg["beta_min"], cfg["beta_max"], cfg["replicas"])
    if kind == "adaptive":
        return adaptive_ladder(graph, cfg["beta_min"], cfg["beta_max"],
                               cfg.get("target_acceptance", 0.3), cfg.get("probe_sweeps", 200),
                               np.random.default_rng(derive_seed(cfg["seed"], 1 << 20)),
                               fallback_replicas=cfg["replicas"])
    raise ConfigError(f"unknown ladder kind {kind!r}")


def _proposal(cfg: dict, graph):
    if not cfg.get("augmented"):
        return None
    _need(cfg, "checkpoint")
    _check_file(cfg["checkpoint"], "checkpoint")
    from .generator import load_checkpoint
    from .tempering import GeneratorProposal

    return GeneratorProposal(load_checkpoint(cfg["checkpoint"]), graph)


def _tapt_config(cfg: dict):
    from .tempering import TAPTConfig

    _positive(cfg, "global_moves", "repetitions")
    if cfg["sweeps_per_move"] < 0 or cfg["augmented"] < 0:
        raise ConfigError("--sweeps-per-move and --augmented must be >= 0")
    return TAPTConfig(cfg["global_moves"], cfg["sweeps_per_move"], cfg["augmented"],
                      cfg["context_fraction"], bool(cfg["mh_corrected"]), cfg["seed"],
                      max(1, int(cfg.get("workers") or 1)))


# -- subcommands ---------------------------------------------------------------------

def cmd_sample(cfg: dict) -> int:
    from .experiments import gibbs_corpus, parse_problem
    from .mcmc import save_dataset
    from .spin_model import energies

    _need(cfg, "problem", "betas")
    _positive(cfg, "per_beta", "chains")
    prob = parse_problem(cfg["problem"])
    ds = gibbs_corpus(prob.graph, cfg["betas"], cfg["per_beta"], cfg["seed"],
                      cfg["mixing_sweeps"], cfg["thinning"], cfg["chains"], cfg["init"])
    if cfg.get("out"):
        save_dataset(ds, cfg["out"], {"config_digest": config_digest(cfg)})
    rows = []
    free = prob.graph.free_idx
    for b in cfg["betas"]:
        sel = ds.spins[ds.betas == b]
        E = energies(prob.graph, sel)
        m = sel[:, free].mean(axis=1) if free.size else np.zeros(len(sel))
        rows.append((b, len(sel), E.mean(), E.std(), m.mean(), np.abs(m).mean()))
    write_csv(cfg.get("summary_out"), _header(cfg),
              ("beta", "n", "energy_mean", "energy_std", "m_mean", "abs_m_mean"), rows)
    return EXIT_OK


def cmd_train(cfg: dict) -> int:
    from .experiments import parse_problem
    from .generator import (
        GeneratorConfig, TokenLayout, TrainHyper, load_checkpoint, save_checkpoint, train,
    )
    from .mcmc import load_dataset

    _need(cfg, "dataset")
    _check_file(cfg["dataset"], "dataset")
    _check_file(cfg.get("resume"), "checkpoint")
    _positive(cfg, "epochs", "batch_size", "lr")
    ds = load_dataset(cfg["dataset"])
    if cfg.get("problem"):
        layout = parse_problem(cfg["problem"]).layout()
    else:
        layout = TokenLayout(ds.n_spins, (), tuple(range(ds.n_spins)))
    model = None
    if cfg.get("resume"):
        model = load_checkpoint(cfg["resume"])
        config = model.config
    else:
        config = GeneratorConfig(d_model=cfg["d_model"], heads=cfg["heads"],
                                 ffn_dim=cfg["ffn_dim"], layers=cfg["layers"],
                                 max_sequence_length=max(1024, layout.n_spins))
    hyper = TrainHyper(lr=cfg["lr"], batch_size=cfg["batch_size"], max_epochs=cfg["epochs"],
                       val_fraction=cfg["val_fraction"], seed=cfg["seed"],
                       patience=cfg.get("patience"))
    model, curve = train(ds, layout, config, hyper, model=model)
    if cfg.get("out"):
        save_checkpoint(model, cfg["out"])
    write_csv(cfg.get("loss_out"), _header(cfg), ("epoch", "train_loss", "val_loss", "best"),
              [(e, a, b, e == curve.best_epoch) for e, a, b in curve.rows()])
    return EXIT_OK


def cmd_exact(cfg: dict) -> int:
    from .exact import kac_ward_thermo, thermo_integration_F
    from .experiments import generator_energy_source, gibbs_energy_source, parse_problem

    _need(cfg, "problem", "betas")
    prob = parse_problem(cfg["problem"])
    if prob.kind != "grid2d":
        raise ConfigError("exact needs a grid2d problem")
    p = prob.params
    clamp = p["pattern"]
    model = None
    if cfg.get("checkpoint"):
        from .generator import load_checkpoint

        _check_file(cfg["checkpoint"], "checkpoint")
        model = load_checkpoint(cfg["checkpoint"])
    cols = ["beta", "logZ", "F", "f", "E_avg", "var"]
    if clamp is not None:
        cols.append("f_all_spins")
    if cfg.get("gibbs_samples"):
        cols.append("f_gibbs")
    if model is not None:
        cols.append("f_generator")
    rows = []
    n_free = prob.graph.n_free
    for j, b in enumerate(cfg["betas"]):
        if b <= 0:
            raise ConfigError("betas must be positive")
        t = kac_ward_thermo(p["Ly"], p["Lx"], b, p["J"], clamp)
        row = [b, t.logZ, t.F, t.f, t.E_avg, t.var_E]
        if clamp is not None:
            row.append(t.f_all)
        if cfg.get("gibbs_samples"):
            src = gibbs_energy_source(prob.graph, _sub(cfg["seed"], 0, j))
            row.append(thermo_integration_F(src, b, n_free, cfg["segments"],
                                            cfg["gibbs_samples"]) / n_free)
        if model is not None:
            prefix = _prefix(prob)
            src = generator_energy_source(model, prob.graph, _sub(cfg["seed"], 1, j), prefix)
            row.append(thermo_integration_F(src, b, n_free, cfg["segments"],
                                            cfg["generator_samples"]) / n_free)
        rows.append(row)
    write_csv(cfg.get("out"), _header(cfg), cols, rows)
    return EXIT_OK


def _sub(root, *keys) -> int:
    from .experiments import derive_seed

    return derive_seed(root, *keys)


def _prefix(prob):
    layout = prob.layout()
    if not layout.n_prefix:
        return None
    clamp = prob.graph.clamp
    return np.array([clamp[i] for i in layout.prefix_idx], dtype=np.int8)


_SUMMARY_COLS = ("mode", "repetition", "seed", "best_energy", "final_energy", "residual",
                 "success", "nontrivial_success", "sweeps_per_replica")


def _summary_rows(mode, prob, traces, E_gnd):
    rows = []
    for t in traces:
        res = (t.best - E_gnd) / prob.graph.n_spins if E_gnd is not None else None
        rows.append((mode, t.metadata["repetition"], t.metadata["seed"], t.best,
                     t.coldest_energies[-1], res, prob.success(t.final_state),
                     prob.nontrivial_success(t.final_state), t.sweeps_per_replica))
    return rows


def _stats_line(label, traces, prob) -> dict:
    best = np.array([t.best for t in traces])
    out = {"label": label, "mean_best": float(best.mean()), "std_best": float(best.std()),
           "median_best": float(np.median(best))}
    succ = [prob.success(t.final_state) for t in traces]
    if succ and succ[0] is not None:
        out["success_rate"] = float(np.mean(succ))
    return out


def cmd_run(cfg: dict) -> int:
    from .experiments import parse_problem, run_repetitions, sign_test
    from .tempering import TAPTConfig

    _need(cfg, "problem")
    prob = parse_problem(cfg["problem"])
    ladder = _ladder(cfg, prob.graph)
    config = _tapt_config(cfg)
    proposal = _proposal(cfg, prob.graph)
    reps, workers = cfg["repetitions"], config.workers
    traces = run_repetitions(prob, ladder, config, proposal, reps, cfg["seed"], 0, workers)
    mode = "tapt" if config.n_augmented else "pt"
    rows = _summary_rows(mode, prob, traces, cfg.get("ground_energy"))
    summary = [_stats_line(mode, traces, prob)]
    if cfg.get("compare_pt") and config.n_augmented:
        pt_cfg = TAPTConfig(config.n_moves, config.sweeps_per_move, 0, 0.0, False, config.seed,
                            config.workers)
        pt = run_repetitions(prob, ladder, pt_cfg, None, reps, cfg["seed"], 0, workers)
        rows = _summary_rows("pt", prob, pt, cfg.get("ground_energy")) + rows
        summary.insert(0, _stats_line("pt", pt, prob))
        st = sign_test([t.best for t in pt], [t.best for t in traces])
        summary.append({"label": "paired", "tapt_wins": st.wins, "pt_wins": st.losses,
                        "ties": st.ties, "win_fraction": st.wins / reps,
                        "sign_test_p": st.p_value})
    header = _header(cfg)
    if cfg.get("trace_out"):
        for k, t in enumerate(traces):
            path = Path(cfg["trace_out"])
            if reps > 1:
                path = path.with_name(f"{path.stem}_rep{k:03d}{path.suffix}")
            t.write_csv(path, [header])
    write_csv(cfg.get("out"), header, _SUMMARY_COLS, rows)
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_ablate(cfg: dict) -> int:
    from .experiments import ablate, parse_problem

    _need(cfg, "problem", "checkpoint")
    prob = parse_problem(cfg["problem"])
    ladder = _ladder(cfg, prob.graph)
    base = _tapt_config(cfg)
    if base.n_augmented == 0:
        raise ConfigError("ablations need --augmented > 0")
    proposal = _proposal(cfg, prob.graph)
    rows = ablate([prob], ladder, base, lambda p: proposal, cfg["repetitions"], cfg["seed"],
                  cfg["contexts"], cfg.get("augmented_grid"), cfg["sweeps_grid"],
                  base.workers)
    cols = ["context_fraction", "augmented", "sweeps_per_move", "success_rate",
            "median_best", "mean_final"] + [f"gen_accept_{r}" for r in range(len(ladder))]
    write_csv(cfg.get("out"), _header(cfg), cols,
              [(r.context_fraction, r.n_augmented, r.sweeps_per_move, r.success_rate,
                r.median_best, r.mean_final, *r.generator_acceptance) for r in rows])
    return EXIT_OK


def cmd_factorize(cfg: dict) -> int:
    from .experiments import Problem, paired_comparison, sign_test
    from .problems import build_multiplier, clamp_product, enumerate_semiprimes

    circuit = build_multiplier(cfg["bits"])
    products = cfg.get("products") or [s.C for s in enumerate_semiprimes(cfg["bits"])]
    config = _tapt_config(cfg)
    if config.n_augmented == 0:
        raise ConfigError("factorize compares against PT; set --augmented > 0")
    ladder = _ladder(cfg, circuit.graph)
    _need(cfg, "checkpoint")
    _check_file(cfg["checkpoint"], "checkpoint")
    from .generator import load_checkpoint
    from .tempering import GeneratorProposal

    model = load_checkpoint(cfg["checkpoint"])
    rows, all_pt, all_tapt = [], [], []
    for key, C in enumerate(products):
        if not (0 < C < 1 << (2 * cfg["bits"])):
            raise ConfigError(f"product {C} does not fit in {2 * cfg['bits']} bits")
        prob = Problem("factor", clamp_product(circuit, C), f"factor C={C}", circuit, C)
        proposal = GeneratorProposal(model, prob.graph)
        pr = paired_comparison(prob, ladder, config, proposal, cfg["repetitions"], cfg["seed"],
                               key, config.workers)
        pt_s = np.array(pr.pt_success, dtype=float)
        tp_s = np.array(pr.tapt_success, dtype=float)
        all_pt.append(pt_s)
        all_tapt.append(tp_s)
        st = sign_test(pt_s, tp_s, lower_is_better=False)
        nt = [np.mean([prob.nontrivial_success(t.final_state) for t in runs])
              for runs in (pr.pt, pr.tapt)]
        rows.append((C, cfg["repetitions"], pt_s.mean(), tp_s.mean(), nt[0], nt[1],
                     np.median(pr.pt_best), np.median(pr.tapt_best), st.wins, st.losses,
                     st.p_value))
    pooled = sign_test(np.concatenate(all_pt), np.concatenate(all_tapt), lower_is_better=False)
    wins = int(sum(r[3] > r[2] for r in rows))
    write_csv(cfg.get("out"), _header(cfg),
              ("C", "repetitions", "pt_success", "tapt_success", "pt_nontrivial",
               "tapt_nontrivial", "pt_median_best",
               "tapt_median_best", "tapt_pair_wins", "pt_pair_wins", "sign_test_p"), rows)
    print(json.dumps({"instances": len(rows), "tapt_instance_wins": wins,
                      "pooled_tapt_wins": pooled.wins, "pooled_pt_wins": pooled.losses,
                      "pooled_sign_test_p": pooled.p_value}, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_ladder(cfg: dict) -> int:
    from .experiments import parse_problem

    _need(cfg, "problem")
    prob = parse_problem(cfg["problem"])
    ladder = _ladder(cfg, prob.graph)
    text = f"# {_header(cfg)}\n" + ladder.to_text()
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


HANDLERS = {"sample": cmd_sample, "train": cmd_train, "exact": cmd_exact, "run": cmd_run,
            "ablate": cmd_ablate, "factorize": cmd_factorize, "ladder": cmd_ladder}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, DomainError, DimensionError, FormatError, GeometryError, LayoutError,
            SizeError, FileNotFoundError) as exc:
        _SUBPARSERS[args.command].print_usage(sys.stderr)
        print(f"tapt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, TrainingDivergedError, FloatingPointError) as exc:
        print(f"tapt {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
