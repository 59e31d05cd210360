"""Command-line driver: sweeps, protocol runs, plots and golden verification.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 a numerical
check or tolerance failed, 3 input/output error.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

from . import __version__
from ._csvio import compare_csv, read_csv, read_tolerances, write_csv
from .asymptotics import LIMIT_TAIL_TOL, convergence_report, inset_sweep
from .checks import inset_N_grid, lambda_grid, run_all
from .cohinfo import DEFAULT_TAIL_TOL, fig1_sweep
from .fock import CutoffError
from .protocol import (
    PROTOCOL_CSV_COLUMNS,
    ProtocolConfig,
    ThermalisationModel,
    protocol_end_to_end,
    two_pulse_level,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

FIG1_COLUMNS = ("N", "n", "lambda", "icoh_bits", "icoh_err", "ea_lower_bits", "g_N_bits")
INSET_COLUMNS = ("N", "alpha", "c", "gap_bits")
CONVERGENCE_COLUMNS = ("N", "c", "n", "dist_q", "dist_p")

PROTOCOL_PRESETS = {
    "two-pulse": dict(lambda_list="0.05", nu_list="0,0.1", n_list="auto", k_list="2", model="ideal"),
    "cascade": dict(lambda_list="0.3", nu_list="0", n_list="3", k_list="6", model="ideal"),
    "dt-sweep": dict(
        lambda_list="0.4", nu_list="0.2", n_list="2", k_list="3", model="exponential",
        dt_list="0.001,0.01,0.1",
    ),
    "reset": dict(
        lambda_list="0.4", nu_list="0.2", n_list="2", k_list="3", model="hard-reset",
        dt_list="0.5,1",
    ),
}


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# value parsing

def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _level_list(text: str):
    if str(text).strip() == "auto":
        return "auto"
    vals = _int_list(text)
    if min(vals) < 0:
        raise argparse.ArgumentTypeError("levels must be >= 0")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use ``_`` or ``-``."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# --------------------------------------------------------------------------
# parser

def _common(p: argparse.ArgumentParser, out_default: str):
    p.add_argument("--config", help="flat key=value file; flags given on the command line win")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", default=out_default, help="output directory")
    p.add_argument("--cutoff-tail-tol", type=float, default=None,
                   help="probability mass allowed above every truncation")
    p.add_argument("--plot", action="store_true", help="also write an SVG plot")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attenuator-lab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fig1", help="coherent information of Fock-environment attenuators vs lambda")
    _common(p, "results")
    p.add_argument("--N", type=float, default=0.5)
    p.add_argument("--n-list", type=_level_list, default=list(range(10, 101, 10)))
    p.add_argument("--lambda-min", type=float, default=0.0)
    p.add_argument("--lambda-max", type=float, default=1.0)
    p.add_argument("--lambda-step", type=float, default=0.005)

    p = sub.add_parser("inset", help="entropy gap of the large-n limit laws at c = N + alpha")
    _common(p, "results")
    p.add_argument("--alpha-list", type=_float_list, default=[0.5, 1.0, 2.0])
    p.add_argument("--N-min", type=float, default=0.05)
    p.add_argument("--N-max", type=float, default=20.0)
    p.add_argument("--N-points", type=_positive_int, default=40)

    p = sub.add_parser("convergence", help="distance of finite-n laws from their limits")
    _common(p, "results")
    p.add_argument("--N", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n-list", type=_level_list, default=[100, 200, 400])

    p = sub.add_parser("protocol", help="trigger-pulse steering runs")
    _common(p, "results")
    p.add_argument("--preset", choices=sorted(PROTOCOL_PRESETS) + ["all"], default=None)
    p.add_argument("--lambda-list", type=_float_list, default=None)
    p.add_argument("--nu-list", type=_float_list, default=None)
    p.add_argument("--n-list", type=_level_list, default=None)
    p.add_argument("--k-list", type=_int_list, default=None)
    p.add_argument("--model", choices=("ideal", "exponential", "hard-reset"), default=None)
    p.add_argument("--dt-list", type=_float_list, default=None, help="values of dt / t_E")
    p.add_argument("--input-N", type=float, default=0.5, help="thermal input energy")
    p.add_argument("--final-xi", type=_bool, default=True)

    p = sub.add_parser("verify", help="regenerate goldens, diff them, run acceptance checks")
    _common(p, "")
    p.add_argument("--golden-dir", default=None, help="defaults to the packaged goldens")
    p.add_argument("--update", action="store_true", help="overwrite the goldens instead of diffing")
    p.add_argument("--skip-checks", action="store_true", help="only diff the goldens")
    return parser


def _config_tokens(parser, command: str, cfg: dict[str, str]) -> list[str]:
    sp = parser._subparsers._group_actions[0].choices[command]  # noqa: SLF001
    by_dest = {a.dest: a for a in sp._actions if a.option_strings}  # noqa: SLF001
    tokens = []
    for key, value in cfg.items():
        if key in ("config", "help") or key not in by_dest:
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = by_dest[key]
        flag = action.option_strings[0]
        if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
            try:
                if _bool(value):
                    tokens.append(flag)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key}: {exc}")
        else:
            tokens += [flag, value]
    return tokens


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        tokens = _config_tokens(parser, args.command, cfg)
        rest = argv[argv.index(args.command) + 1 :]
        args = parser.parse_args([args.command] + tokens + rest)
    return args


# --------------------------------------------------------------------------
# commands

@contextmanager
def _mapper(threads: int):
    if threads <= 1:
        yield map
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield pool.map


def _header(command: str, settings: str, policy: str) -> list[str]:
    return [f"attenuator_lab {__version__} {command}", f"settings: {settings}", f"cutoff policy: {policy}"]


def run_fig1(args, out: Path) -> Path:
    if args.n_list == "auto" or not args.n_list:
        raise UsageError("--n-list needs explicit levels")
    if not 0 <= args.lambda_min <= args.lambda_max <= 1:
        raise UsageError("need 0 <= lambda-min <= lambda-max <= 1")
    if args.N < 0:
        raise UsageError("--N must be >= 0")
    tol = args.cutoff_tail_tol or DEFAULT_TAIL_TOL
    grid = lambda_grid(args.lambda_min, args.lambda_max, args.lambda_step)
    with _mapper(args.threads) as m:
        reports = fig1_sweep(args.N, args.n_list, grid, tail_tol=tol, map_fn=m)
    rows = [(r.N, r.n, r.lam, r.i_coh, r.i_coh_err, r.ea_lower, r.noiseless_c) for r in reports]
    path = write_csv(
        out / "fig1.csv", FIG1_COLUMNS, rows,
        _header(
            "fig1",
            f"N={args.N:g} n_list={','.join(map(str, args.n_list))} lambda={args.lambda_min:g}:"
            f"{args.lambda_max:g}:{args.lambda_step:g}",
            f"support of each output law doubled until its tail is <= {tol:g}; icoh_err bounds the "
            "tail entropy",
        ),
    )
    if args.plot:
        _plot_fig1(path)
    return path


def run_inset(args, out: Path) -> Path:
    if not 0 < args.N_min <= args.N_max:
        raise UsageError("need 0 < N-min <= N-max")
    if min(args.alpha_list) <= 0:
        raise UsageError("alpha values must be positive")
    tol = args.cutoff_tail_tol or LIMIT_TAIL_TOL
    grid = inset_N_grid(args.N_min, args.N_max, args.N_points)
    with _mapper(args.threads) as m:
        rows = inset_sweep(args.alpha_list, grid, map_fn=m, tail_tol=tol)
    path = write_csv(
        out / "inset.csv", INSET_COLUMNS, rows,
        _header(
            "inset",
            f"alpha_list={','.join(f'{a:g}' for a in args.alpha_list)} N=geomspace({args.N_min:g},"
            f"{args.N_max:g},{args.N_points})",
            f"limit-law supports doubled until the tail is <= {tol:g}",
        ),
    )
    if args.plot:
        _plot_inset(path)
    bad = [r for r in rows if not r[3] > 0]
    if bad:
        raise NumericFailure(f"{len(bad)} non-positive gap rows, first N={bad[0][0]:g} alpha={bad[0][1]:g}")
    return path


def run_convergence(args, out: Path) -> Path:
    if args.n_list == "auto":
        raise UsageError("--n-list needs explicit levels")
    if args.N <= 0 or args.c <= 0:
        raise UsageError("--N and --c must be positive")
    try:
        rows = convergence_report(args.N, args.c, args.n_list)
    except ValueError as exc:
        raise UsageError(str(exc))
    path = write_csv(
        out / "convergence.csv", CONVERGENCE_COLUMNS, rows,
        _header(
            "convergence", f"N={args.N:g} c={args.c:g} n_list={','.join(map(str, args.n_list))}",
            "finite-n and limit supports doubled until tails are <= 1e-12; sup over the union of supports",
        ),
    )
    if args.plot:
        _plot_convergence(path)
    for col in (3, 4):
        seq = [r[col] for r in rows]
        if any(b > a for a, b in zip(seq, seq[1:])):
            raise NumericFailure(f"{CONVERGENCE_COLUMNS[col]} increases with n: {seq}")
    return path


def _protocol_grid(args):
    explicit = any(
        getattr(args, k) is not None for k in ("lambda_list", "nu_list", "n_list", "k_list", "model", "dt_list")
    )
    if args.preset and explicit:
        raise UsageError("--preset cannot be combined with explicit grid options")
    if args.preset or not explicit:
        names = sorted(PROTOCOL_PRESETS) if args.preset in (None, "all") else [args.preset]
        specs = []
        for name in names:
            raw = PROTOCOL_PRESETS[name]
            specs.append(dict(
                lambda_list=_float_list(raw["lambda_list"]), nu_list=_float_list(raw["nu_list"]),
                n_list=_level_list(raw["n_list"]), k_list=_int_list(raw["k_list"]),
                model=raw["model"], dt_list=_float_list(raw.get("dt_list", "0")),
            ))
    else:
        model = args.model or "ideal"
        if model != "ideal" and args.dt_list is None:
            raise UsageError("--dt-list is required for a thermalisation model")
        specs = [dict(
            lambda_list=args.lambda_list or [0.3], nu_list=args.nu_list or [0.0],
            n_list=args.n_list if args.n_list is not None else [3], k_list=args.k_list or [6],
            model=model, dt_list=args.dt_list or [0.0],
        )]
    configs = []
    for s in specs:
        for lam in s["lambda_list"]:
            for nu in s["nu_list"]:
                levels = [two_pulse_level(lam)] if s["n_list"] == "auto" else s["n_list"]
                for n in levels:
                    for k in s["k_list"]:
                        for dt in s["dt_list"]:
                            model = None
                            if s["model"] != "ideal":
                                model = ThermalisationModel(s["model"], dt, 1.0)
                            configs.append(ProtocolConfig(lam, nu, n, k, model, final_xi=args.final_xi))
    return configs


def run_protocol(args, out: Path) -> Path:
    if args.cutoff_tail_tol is not None:
        raise UsageError("protocol runs use a fixed cutoff policy; --cutoff-tail-tol is not supported")
    try:
        configs = _protocol_grid(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    N = args.input_N
    with _mapper(args.threads) as m:
        reports = list(m(lambda c: protocol_end_to_end(c, N), configs))
    for r in reports:
        print(r.summary())
    path = write_csv(
        out / "protocol.csv", PROTOCOL_CSV_COLUMNS, [r.row() for r in reports],
        _header(
            "protocol", f"input_N={N:g} final_xi={int(args.final_xi)} t_E=1",
            "environment cutoff n + thermal_cutoff(nu, 1e-12) + 1 with leak check; input tau_N cut at tail 1e-13",
        ),
    )
    bad = [r for r in reports if not r.bound_holds]
    if bad:
        raise NumericFailure(f"{len(bad)} runs exceed the Fock distance bound")
    return path


# --------------------------------------------------------------------------
# verify

GOLDEN_FILES = ("fig1.csv", "inset.csv", "convergence.csv", "protocol.csv")


def _golden_dir(arg) -> Path:
    if arg:
        return Path(arg)
    return Path(str(resources.files("attenuator_lab") / "golden"))


def regenerate_all(out: Path, threads: int) -> list[Path]:
    """Write every golden artifact with default settings into ``out``."""
    parser = build_parser()
    paths = []
    for cmd, runner in (("fig1", run_fig1), ("inset", run_inset), ("convergence", run_convergence),
                        ("protocol", run_protocol)):
        args = parser.parse_args([cmd, "--threads", str(threads)])
        paths.append(runner(args, out))
    return paths


def run_verify(args) -> int:
    golden = _golden_dir(args.golden_dir)
    if args.update:
        golden.mkdir(parents=True, exist_ok=True)
        regenerate_all(golden, args.threads)
        print(f"goldens written to {golden}")
        return EXIT_OK
    tol_file = golden / "tolerances.txt"
    missing = [f for f in GOLDEN_FILES + ("tolerances.txt",) if not (golden / f).is_file()]
    if missing:
        print(f"missing goldens in {golden}: {', '.join(missing)}", file=sys.stderr)
        return EXIT_IO
    tolerances = read_tolerances(tol_file)
    with tempfile.TemporaryDirectory() as tmp:
        fresh_dir = Path(args.out) if args.out else Path(tmp)
        regenerate_all(fresh_dir, args.threads)
        problems = []
        for name in GOLDEN_FILES:
            problems += compare_csv(name, golden / name, fresh_dir / name, tolerances)
    for p in problems[:50]:
        print(f"[DIFF] {p}")
    print(f"golden comparison: {'ok' if not problems else f'{len(problems)} differences'}")
    failed = bool(problems)
    if not args.skip_checks:
        with _mapper(args.threads) as m:
            results = run_all(map_fn=m)
        for r in results:
            print(r.line())
        failed |= not all(r.passed for r in results)
    return EXIT_NUMERIC if failed else EXIT_OK


# --------------------------------------------------------------------------
# plots

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "attenuator-lab"
    return plt


def _columns(path):
    cols, rows = read_csv(path)
    return {c: [r[i] for r in rows] for i, c in enumerate(cols)}


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path.with_suffix(".svg"), format="svg", metadata={"Date": None})


def _plot_fig1(path: Path):
    plt = _pyplot()
    data = _columns(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for n in sorted(set(data["n"]), key=int):
        sel = [i for i, x in enumerate(data["n"]) if x == n]
        ax.plot([float(data["lambda"][i]) for i in sel], [float(data["icoh_bits"][i]) for i in sel],
                lw=1, label=f"n={n}")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("lambda")
    ax.set_ylabel("I_coh [bits]")
    ax.legend(fontsize=7, ncol=2)
    _save(fig, path)
    plt.close(fig)


def _plot_inset(path: Path):
    plt = _pyplot()
    data = _columns(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for a in sorted(set(data["alpha"]), key=float):
        sel = [i for i, x in enumerate(data["alpha"]) if x == a]
        ax.semilogx([float(data["N"][i]) for i in sel], [float(data["gap_bits"][i]) for i in sel],
                    marker=".", lw=1, label=f"alpha={a}")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel("N")
    ax.set_ylabel("H(q) - H(p) [bits]")
    ax.legend(fontsize=8)
    _save(fig, path)
    plt.close(fig)


def _plot_convergence(path: Path):
    plt = _pyplot()
    data = _columns(path)
    n = [float(x) for x in data["n"]]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(n, [float(x) for x in data["dist_q"]], marker="o", label="shifted law vs q")
    ax.loglog(n, [float(x) for x in data["dist_p"]], marker="s", label="law vs p")
    ax.set_xlabel("n")
    ax.set_ylabel("sup-norm distance")
    ax.legend(fontsize=8)
    _save(fig, path)
    plt.close(fig)


# --------------------------------------------------------------------------

RUNNERS = {"fig1": run_fig1, "inset": run_inset, "convergence": run_convergence, "protocol": run_protocol}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        if args.command == "verify":
            return run_verify(args)
        path = RUNNERS[args.command](args, Path(args.out))
        print(f"wrote {path}")
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, CutoffError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
