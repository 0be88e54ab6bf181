"""Command-line front end: ``qredist <command> [flags]``.

Every command except gen and suite writes one CSV row per input (or a JSON
report with --json).  Without --input, --trials random inputs are drawn
from --seed; trial i uses a seed derived from (seed, i).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import (
    DensityOperator,
    LayoutError,
    RegisterLayout,
    StateVector,
    partial_trace,
    random_state,
)
from .statefile import StateFileError, fmt, load_state, save_state

COMMANDS = ("gen", "quantities", "convexsplit", "redistribute", "split", "merge", "qeps", "suite")
CONFIG_FIELDS = ("command", "input_path", "seed", "eps", "delta", "trials", "t_dim", "n_override",
                 "out_path", "jobs")

DEFAULTS = {"seed": 0, "eps": 0.1, "delta": 0.12, "trials": 1, "t_dim": 1, "n_override": None,
            "input_path": None, "out_path": None, "jobs": 1}

# layouts used when no --input is given
RANDOM_INPUTS = {
    "quantities": ("density", ["A", "B"], [2, 2]),
    "convexsplit": ("density", ["P", "Q"], [2, 2]),
    "redistribute": ("pure", ["R", "A", "B", "C"], [2, 2, 2, 2]),
    "split": ("pure", ["R", "A", "C"], [2, 2, 2]),
    "merge": ("pure", ["R", "B", "C"], [2, 2, 2]),
    "qeps": ("pure", ["R", "A", "B", "C"], [2, 2, 2, 2]),
}

COLUMNS = {
    "quantities": [
        ("input_id", "file stem or seed-derived id"),
        ("part_a", "registers of A, joined by '+'"),
        ("part_b", "registers of B, joined by '+'"),
        ("fidelity_self", "F(rho_AB, rho_AB); 1 up to rounding"),
        ("entropy", "S(AB) in bits"),
        ("mutual_info", "I(A:B) in bits"),
        ("imax", "Imax(A:B) from the SDP, bits"),
        ("hmin", "Hmin(A|B) from the SDP, bits"),
        ("hmax", "Hmax(A|B) = -Hmin(A|R') on a purification, bits"),
        ("imax_feasibility", "min eigenvalue of rho_A ⊗ Y - rho_AB at the SDP optimum"),
    ],
    "convexsplit": [
        ("input_id", "file stem or seed-derived id"),
        ("delta", "target closeness parameter"),
        ("k", "Dmax(rho_PQ || rho_P ⊗ sigma_Q), bits"),
        ("n", "number of Q copies used"),
        ("n_overridden", "true when n came from --n-override"),
        ("mutual_info", "I(P:Q_1..Q_n) of the mixture, bits"),
        ("fidelity_sq", "F^2 between the mixture and the product of its marginals"),
        ("bound_3delta_ok", "mutual_info <= 3 delta"),
        ("bound_6delta_ok", "fidelity_sq >= 1 - 6 delta"),
        ("stages_ok", "every intermediate inequality holds"),
        ("pinsker_chain_ok", "F >= 1 - mutual_info"),
    ],
    "redistribute": [
        ("input_id", "file stem or seed-derived id"),
        ("eps", "error parameter"),
        ("n", "number of convex-split copies"),
        ("comm_qubits", "log2(n)/2, the accounted cost"),
        ("operational_qubits", "ceil(ceil(log2 n)/2), qubits actually sent"),
        ("out_fidelity_sq", "F^2 between the output and the input state"),
        ("in_ball", "purified distance of the output <= 2 eps"),
        ("n_source", "how n was picked: auto, override, lemma or decoupled"),
    ],
    "split": [
        ("input_id", "file stem or seed-derived id"),
        ("eps", "error parameter"),
        ("n", "number of convex-split copies"),
        ("comm_qubits", "log2(n)/2"),
        ("operational_qubits", "qubits actually sent"),
        ("out_fidelity_sq", "F^2 between output and input"),
        ("in_ball", "purified distance <= 2 eps"),
        ("n_source", "how n was picked"),
        ("budget_qubits", "closed-form cost budget"),
        ("within_budget", "comm_qubits <= budget_qubits"),
    ],
    "merge": [
        ("input_id", "file stem or seed-derived id"),
        ("eps", "error parameter"),
        ("n", "number of convex-split copies"),
        ("comm_qubits", "log2(n)/2"),
        ("operational_qubits", "qubits actually sent"),
        ("out_fidelity_sq", "F^2 between the reduced output on R, B, C and the input"),
        ("in_ball", "purified distance <= 2 eps"),
        ("global_fidelity_sq", "F^2 of the global state with the splitting start state"),
        ("success_weight", "norm kept by the inverse run"),
        ("in_ball_3eps", "global purified distance <= 3 eps"),
    ],
    "qeps": [
        ("input_id", "file stem or seed-derived id"),
        ("eps", "error parameter"),
        ("t_dim", "dimension of the auxiliary register T"),
        ("upper_bits", "feasible-point value, an upper bound"),
        ("lower_bits", "-2 log2 F(R:C|B) + log2(1 - eps^2) with the optimized recovery"),
        ("restarts", "search restarts"),
        ("converged", "true when every restart ended by step-size collapse"),
    ],
}


class UsageError(Exception):
    pass


@dataclass
class Config:
    command: str
    input_path: str | None
    seed: int
    eps: float
    delta: float
    trials: int
    t_dim: int
    n_override: int | None
    out_path: str | None
    jobs: int


# --- argument parsing -------------------------------------------------------------

def _columns_help(command: str) -> str:
    lines = ["CSV columns:"]
    width = max(len(c) for c, _ in COLUMNS[command])
    for name, doc in COLUMNS[command]:
        lines.append(f"  {name.ljust(width)}  {doc}")
    return "\n".join(lines)


def _common(p: argparse.ArgumentParser, *, state_input=True, numeric=True):
    if state_input:
        p.add_argument("--input", dest="input_path", help="state file (JSON); random inputs if omitted")
    p.add_argument("--seed", type=int, help="64-bit seed for all randomness (default 0)")
    if numeric:
        p.add_argument("--eps", type=float, help="error parameter (default 0.1)")
        p.add_argument("--delta", type=float, help="convex-split closeness (default 0.12)")
        p.add_argument("--trials", type=int, help="random inputs when --input is omitted (default 1)")
        p.add_argument("--t-dim", dest="t_dim", type=int, help="dimension of T (default 1)")
        p.add_argument("--n-override", dest="n_override", type=int, help="fix the number of copies")
        p.add_argument("--jobs", type=int, help="worker processes (default 1); output order is fixed")
    p.add_argument("--out", dest="out_path", help="output file (default stdout)")
    p.add_argument("--config", help="JSON file with the same field names; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qredist", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    fmt_cls = argparse.RawDescriptionHelpFormatter

    g = sub.add_parser("gen", help="write a random state file", formatter_class=fmt_cls,
                       description="Write a Haar-random pure state or a random density operator.")
    g.add_argument("--kind", choices=["pure", "density"], default="pure")
    g.add_argument("--dims", required=True, help="comma-separated register dimensions, e.g. 2,2,2")
    g.add_argument("--labels", required=True, help="comma-separated register labels, e.g. R,A,C")
    _common(g, state_input=False, numeric=False)

    q = sub.add_parser("quantities", help="entropic quantities of a bipartition",
                       formatter_class=fmt_cls, epilog=_columns_help("quantities"))
    q.add_argument("--part-a", help="comma-separated labels of A (default: first register)")
    q.add_argument("--part-b", help="comma-separated labels of B (default: all other registers)")
    _common(q)

    c = sub.add_parser("convexsplit", help="verify the convex-split closeness bounds",
                       formatter_class=fmt_cls, epilog=_columns_help("convexsplit"))
    c.add_argument("--q", dest="q_labels", help="comma-separated labels of Q (default: last register)")
    c.add_argument("--sigma", help="state file for sigma_Q (default: the Q marginal of the input)")
    c.add_argument("--memory-cap", type=int, default=2**10, help="largest dense dimension (default 1024)")
    c.add_argument("--json", action="store_true", help="write the full JSON report instead of CSV")
    _common(c)

    for name, text in (("redistribute", "run the redistribution protocol on a pure R,A,B,C state"),
                       ("split", "state splitting on a pure R,A,C state"),
                       ("merge", "state merging on a pure R,B,C state")):
        p = sub.add_parser(name, help=text, formatter_class=fmt_cls, epilog=_columns_help(name))
        if name == "redistribute":
            p.add_argument("--mode", choices=["channel", "sample", "coherent"], default="channel")
        cap = 2**8 if name == "merge" else 2**10
        p.add_argument("--memory-cap", type=int, default=cap, help=f"largest split dimension (default {cap})")
        p.add_argument("--json", action="store_true", help="write full transcripts as JSON")
        _common(p)

    e = sub.add_parser("qeps", help="upper and lower estimates of Q^eps",
                       formatter_class=fmt_cls, epilog=_columns_help("qeps"))
    e.add_argument("--restarts", type=int, default=4)
    e.add_argument("--iterations", type=int, default=500)
    _common(e)

    s = sub.add_parser("suite", help="run the acceptance battery", formatter_class=fmt_cls,
                       description="Prints one PASS/FAIL/REPORT line per criterion; --out gets a JSON report.")
    s.add_argument("--criteria", help="comma-separated subset, e.g. 1,3,7-literal")
    _common(s, state_input=False, numeric=False)
    return parser


def _load_config(path: str) -> dict[str, Any]:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = set(obj) - set(CONFIG_FIELDS)
    if unknown:
        raise UsageError(f"config {path} has unknown field {sorted(unknown)[0]!r}")
    return obj


def resolve(args: argparse.Namespace) -> Config:
    """Merge flags over the config file over the defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        if "command" in file_cfg and file_cfg["command"] != args.command:
            raise UsageError(f"config command {file_cfg['command']!r} differs from {args.command!r}")
        cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    conf = Config(command=args.command, **cfg)
    validate(conf)
    return conf


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def validate(c: Config) -> None:
    if not _is_int(c.seed) or not 0 <= c.seed < 2**64:
        raise UsageError(f"seed must be an integer in [0, 2^64), got {c.seed!r}")
    if not _is_int(c.trials) or c.trials < 1:
        raise UsageError(f"trials must be a positive integer, got {c.trials!r}")
    if not _is_int(c.jobs) or c.jobs < 1:
        raise UsageError(f"jobs must be a positive integer, got {c.jobs!r}")
    if c.n_override is not None and (not _is_int(c.n_override) or c.n_override < 1):
        raise UsageError(f"n-override must be a positive integer, got {c.n_override!r}")
    if not _is_int(c.t_dim) or not 1 <= c.t_dim <= 4:
        raise UsageError(f"t-dim must be an integer in [1, 4], got {c.t_dim!r}")
    if not isinstance(c.delta, (int, float)) or not 0 < c.delta < 1 / 6:
        raise UsageError(f"delta must lie in (0, 1/6), got {c.delta!r}")
    if not isinstance(c.eps, (int, float)) or not math.isfinite(c.eps):
        raise UsageError(f"eps must be a number, got {c.eps!r}")
    if c.command in ("redistribute", "split", "merge") and not 0 < c.eps < 1 / 3:
        raise UsageError(f"eps must lie in (0, 1/3) for {c.command}, got {c.eps}")
    if c.command == "qeps" and not 0 < c.eps < 1:
        raise UsageError(f"eps must lie in (0, 1) for qeps, got {c.eps}")


# --- inputs -----------------------------------------------------------------------------

def trial_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([seed, i]).generate_state(1, dtype=np.uint64)[0])


def _inputs(c: Config) -> list[tuple[str, Any]]:
    if c.input_path:
        return [(Path(c.input_path).stem, load_state(c.input_path))]
    kind, labels, dims = RANDOM_INPUTS[c.command]
    lay = RegisterLayout.of(labels, dims)
    return [(f"s{c.seed}-{i}", random_state(kind, lay, trial_seed(c.seed, i))) for i in range(c.trials)]


def _as_density(state) -> DensityOperator:
    return state.to_density() if isinstance(state, StateVector) else state


def _pure(state, command: str) -> StateVector:
    if not isinstance(state, StateVector):
        raise UsageError(f"{command} needs a pure state file (kind 'pure')")
    return state


def _labels(text: str | None) -> list[str] | None:
    if text is None:
        return None
    out = [x.strip() for x in text.split(",") if x.strip()]
    if not out:
        raise UsageError("empty label list")
    return out


# --- per-input work ---------------------------------------------------------------------

def _quantities(state, opts: dict) -> dict:
    from .entropies import entropy, fidelity, hmax, hmin, imax, mutual_info
    rho = _as_density(state)
    labels = list(rho.layout.labels)
    if len(labels) < 2:
        raise UsageError("quantities needs at least two registers")
    a = opts.get("part_a") or labels[:1]
    b = opts.get("part_b") or [x for x in labels if x not in a]
    sub = partial_trace(rho, a + b)
    res = imax(sub, a, b)
    return {
        "part_a": "+".join(a), "part_b": "+".join(b),
        "fidelity_self": fidelity(sub, sub),
        "entropy": entropy(sub),
        "mutual_info": mutual_info(sub, a, b),
        "imax": res.value,
        "hmin": hmin(sub, a, b).value,
        "hmax": hmax(sub, a, b).value,
        "imax_feasibility": res.certificate["primal_min_eig"],
    }


def _convexsplit(state, c: Config, opts: dict) -> tuple[dict, dict]:
    from .convex_split import make_instance, verify_lemma
    rho = _as_density(state)
    labels = list(rho.layout.labels)
    q = opts.get("q_labels") or labels[-1:]
    if opts.get("sigma"):
        sigma = _as_density(load_state(opts["sigma"]))
    else:
        sigma = partial_trace(rho, q)
    inst = make_instance(rho, sigma, c.delta, n_override=c.n_override)
    rep = verify_lemma(inst, memory_cap=opts["memory_cap"])
    row = {
        "delta": rep.delta, "k": rep.k, "n": rep.n, "n_overridden": rep.n_overridden,
        "mutual_info": rep.mutual_info, "fidelity_sq": rep.fidelity_sq,
        "bound_3delta_ok": rep.bound_3delta_ok, "bound_6delta_ok": rep.bound_6delta_ok,
        "stages_ok": rep.stage_terms.all_ok, "pinsker_chain_ok": rep.pinsker_chain_ok,
    }
    return row, rep.to_dict()


def _protocol(state, c: Config, opts: dict, seed: int) -> tuple[dict, dict]:
    from .protocols import RedistributionInput, merge, redistribute, split
    psi = _pure(state, c.command)
    cap = opts["memory_cap"]
    if c.command == "redistribute":
        tr = redistribute(RedistributionInput(psi, c.eps, n_override=c.n_override),
                          mode=opts.get("mode", "channel"), seed=seed, memory_cap=cap, t_dim=c.t_dim)
        extra = {}
    elif c.command == "split":
        tr = split(psi, c.eps, seed=seed, n_override=c.n_override, memory_cap=cap, t_dim=c.t_dim)
        extra = {"budget_qubits": tr.diagnostics["budget"]["budget"],
                 "within_budget": tr.diagnostics["within_budget"]}
    else:
        rep = merge(psi, c.eps, seed=seed, n_override=c.n_override, memory_cap=cap, t_dim=c.t_dim)
        tr = rep.transcript
        extra = {"global_fidelity_sq": rep.global_fidelity_sq,
                 "success_weight": rep.success_weight, "in_ball_3eps": rep.in_ball_3eps}
    row = tr.csv_row("")
    row.pop("input_id")
    if c.command != "merge":
        row["n_source"] = tr.n_source
    row.update(extra)
    return row, tr.to_dict()


def _qeps(state, c: Config, opts: dict, seed: int) -> dict:
    from .qeps import qeps_upper
    psi = _pure(state, "qeps")
    est = qeps_upper(psi, c.eps, t_dim=c.t_dim, restarts=opts["restarts"],
                     iterations=opts["iterations"], seed=seed)
    row = est.csv_row("", c.eps)
    row.pop("input_id")
    return row


def _work(job) -> tuple[dict, dict | None]:
    c, opts, index, input_id, state = job
    seed = trial_seed(c.seed, index)
    if c.command == "quantities":
        row, report = _quantities(state, opts), None
    elif c.command == "convexsplit":
        row, report = _convexsplit(state, c, opts)
    elif c.command in ("redistribute", "split", "merge"):
        row, report = _protocol(state, c, opts, seed)
    else:
        row, report = _qeps(state, c, opts, seed), None
    return {"input_id": input_id, **row}, report


# --- output -----------------------------------------------------------------------------

def cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return fmt(x)
    return str(x)


def csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([cell(r[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        try:
            Path(out_path).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {out_path}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _check_out(out_path: str | None) -> None:
    if out_path:
        parent = Path(out_path).resolve().parent
        if not parent.is_dir():
            raise UsageError(f"output directory {parent} does not exist")


# --- commands -----------------------------------------------------------------------------

def cmd_gen(args, c: Config) -> int:
    labels = _labels(args.labels)
    try:
        dims = [int(x) for x in args.dims.split(",")]
    except ValueError:
        raise UsageError(f"dims must be comma-separated integers, got {args.dims!r}") from None
    state = random_state(args.kind, RegisterLayout.of(labels, dims), c.seed)
    if c.out_path:
        _check_out(c.out_path)
        save_state(state, c.out_path)
    else:
        from .statefile import dumps_state
        sys.stdout.write(dumps_state(state))
    return 0


def cmd_suite(args, c: Config) -> int:
    from . import acceptance
    which = _labels(args.criteria) if args.criteria else None
    if which:
        unknown = [k for k in which if k not in acceptance.CRITERIA]
        if unknown:
            raise UsageError(f"unknown criterion {unknown[0]!r}; choose from {','.join(acceptance.CRITERIA)}")
    _check_out(c.out_path)
    results = acceptance.run(which)
    report = []
    for r in results:
        print(r.line(), flush=True)
        report.append({"criterion": r.key, "title": r.title, "passed": r.passed,
                       "runtime_s": r.runtime, "budget_s": r.budget, "details": r.details})
    if c.out_path:
        from .protocols import _jsonable
        Path(c.out_path).write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return 0 if all(r.passed is not False for r in results) else 1


def cmd_table(args, c: Config) -> int:
    opts = {
        "part_a": _labels(getattr(args, "part_a", None)),
        "part_b": _labels(getattr(args, "part_b", None)),
        "q_labels": _labels(getattr(args, "q_labels", None)),
        "sigma": getattr(args, "sigma", None),
        "memory_cap": getattr(args, "memory_cap", 2**10),
        "mode": getattr(args, "mode", "channel"),
        "restarts": getattr(args, "restarts", 4),
        "iterations": getattr(args, "iterations", 500),
    }
    for key in ("memory_cap", "restarts", "iterations"):
        if opts[key] < 1:
            raise UsageError(f"{key.replace('_', '-')} must be positive, got {opts[key]}")
    _check_out(c.out_path)
    jobs = [(c, opts, i, input_id, state) for i, (input_id, state) in enumerate(_inputs(c))]
    if c.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=c.jobs) as pool:
            results = list(pool.map(_work, jobs))
    else:
        results = [_work(j) for j in jobs]
    if getattr(args, "json", False):
        from .protocols import _jsonable
        reports = [{"input_id": row["input_id"], **rep} for row, rep in results]
        _emit(json.dumps(_jsonable(reports), indent=2, sort_keys=True) + "\n", c.out_path)
    else:
        columns = [name for name, _ in COLUMNS[c.command]]
        _emit(csv_text(columns, [row for row, _ in results]), c.out_path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    from .convex_split import MemoryCapError
    from .protocols import ConstraintError
    try:
        c = resolve(args)
        if args.command == "gen":
            return cmd_gen(args, c)
        if args.command == "suite":
            return cmd_suite(args, c)
        return cmd_table(args, c)
    except (UsageError, StateFileError, LayoutError, MemoryCapError, ConstraintError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"qredist {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
