"""Command-line interface.

Exit codes: 0 when every requested property holds, 1 when some fails, 2 on
any error (message on stderr with a stable error code).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .causal import Principle, all_verdicts, check
from .errors import BellCauseError
from .fileformat import ScenarioFile, parse
from .polytope import certificate_is_sound, determinize, membership, model_from_weights, weights_reproduce
from .prob import reproduces
from .properties import (
    Property,
    is_local,
    is_locally_causal,
    is_predetermined,
    is_predictable,
    is_signal_local,
)
from .quantum import chsh_table
from .theorems import LEMMAS, reconcile, verify_lemma

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
CHSH_LOCAL_BOUND = 2


class UsageError(BellCauseError):
    code = "E_USAGE"


class SeedRequired(BellCauseError):
    code = "E_SEED_REQUIRED"


# -- output helpers ----------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def render_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _verdict_rows(verdicts):
    out = []
    for v in verdicts:
        name = getattr(v, "property_name", None) or v.principle
        out.append((name.value, "holds" if v.holds else "FAILS", _short(v.witness)))
    return out


def _short(witness) -> str:
    if not witness:
        return ""
    keep = {k: v for k, v in witness.items() if k != "violations"}
    return json.dumps(_jsonable(keep), sort_keys=True)


# -- commands ----------------------------------------------------------------------------


def _need_phenomenon(sf: ScenarioFile, command: str):
    f = sf.phenomenon()
    if f is None:
        raise UsageError(f"'{command}' needs a phenomenon, hv_model or quantum block")
    return f


def cmd_check(sf: ScenarioFile, args):
    tol = sf.analysis.tol
    if sf.kind == "hv_model":
        m = sf.payload
        requested = [is_predetermined(m, tol), is_local(m, tol), is_locally_causal(m, tol)]
        f = sf.phenomenon()
        info = [is_predictable(f, tol), is_signal_local(f, tol)]
    elif sf.kind == "causal":
        raise UsageError("'check' applies to phenomena and hidden-variable models; use 'causal'")
    else:
        f = sf.phenomenon()
        requested = [is_predictable(f, tol), is_signal_local(f, tol)]
        info = []
    if args.property:
        wanted = {Property(p) for p in args.property}
        pool = requested + info
        requested = [v for v in pool if v.property_name in wanted]
        info = [v for v in pool if v.property_name not in wanted]
    text = [render_table(("property", "verdict", "witness"), _verdict_rows(requested))]
    if info:
        text.append("\npredicted phenomenon (informational):")
        text.append(render_table(("property", "verdict", "witness"), _verdict_rows(info)))
    result = {"verdicts": [v.to_dict() for v in requested], "informational": [v.to_dict() for v in info]}
    return all(v.holds for v in requested), result, "\n".join(text)


def _chsh_section(f):
    sc = f.scenario
    if sc.n_outcomes_alice != 2 or sc.n_outcomes_bob != 2 or sc.n_settings_alice < 2 or sc.n_settings_bob < 2:
        return None, []
    rows = chsh_table(f)
    best = max(abs(v) for _, v in rows)
    return best, rows


def cmd_membership(sf: ScenarioFile, args):
    f = _need_phenomenon(sf, "membership")
    result = membership(f, max_denominator=sf.analysis.max_denominator)
    best, _ = _chsh_section(f)
    lines = [f"member of the local polytope: {_fmt(result.member)}"]
    if result.rationalized:
        lines.append(f"note: decided for the table rationalized at denominator <= {sf.analysis.max_denominator}")
    out = result.to_dict()
    if result.member:
        lines.append(render_table(("strategy", "weight"), sorted(result.weights.items())))
        out["weights_reproduce"] = weights_reproduce(result)
    else:
        c = result.certificate
        lines.append(f"separating functional: value {_fmt(float(c.value))} > local bound {_fmt(c.bound)}")
        out["certificate_sound"] = certificate_is_sound(c, result.phenomenon)
    if best is not None:
        lines.append(f"max |CHSH| = {_fmt(float(best))}")
        out["max_abs_chsh"] = float(best)
    return result.member, out, "\n".join(lines)


def cmd_chsh(sf: ScenarioFile, args):
    f = _need_phenomenon(sf, "chsh")
    best, rows = _chsh_section(f)
    if best is None:
        raise UsageError("CHSH needs two outcomes and at least two settings per side")
    table = [((a1, a2, b1, b2), float(v)) for (a1, a2, b1, b2), v in rows]
    text = render_table(("a1", "a2", "b1", "b2", "CHSH"), [(*k, v) for k, v in table])
    ok = best <= CHSH_LOCAL_BOUND + sf.analysis.tol
    text += f"\nmax |CHSH| = {_fmt(float(best))} (local bound {CHSH_LOCAL_BOUND})"
    out = {"table": [{"settings": list(k), "value": v} for k, v in table], "max_abs_chsh": float(best),
           "local_bound": CHSH_LOCAL_BOUND}
    return bool(ok), out, text


def cmd_fine(sf: ScenarioFile, args):
    tol = sf.analysis.tol
    out = {}
    lines = []
    if sf.kind == "hv_model" and is_locally_causal(sf.payload, tol).holds:
        m = sf.payload
        d = determinize(m, tol)
        target = sf.phenomenon()
        checks = {
            "determinized_predetermined": is_predetermined(d, tol).holds,
            "determinized_local": is_local(d, tol).holds,
            "determinized_reproduces": reproduces(d, target, 0 if d.exact else tol),
        }
        out["determinized_support"] = len(d.labels)
        lines.append(f"determinize: {len(m.labels)} -> {len(d.labels)} hidden-variable values")
    else:
        checks = {}
    f = _need_phenomenon(sf, "fine")
    result = membership(f, max_denominator=sf.analysis.max_denominator)
    out["member"] = result.member
    if result.member:
        back = model_from_weights(result)
        exact_f = result.phenomenon
        checks.update({
            "weights_model_predetermined": is_predetermined(back, tol).holds,
            "weights_model_local": is_local(back, tol).holds,
            "weights_model_locally_causal": is_locally_causal(back, tol).holds,
            "weights_model_reproduces": reproduces(back, exact_f, 0),
        })
    else:
        checks["member"] = False
        out["certificate"] = result.to_dict().get("certificate")
    out["checks"] = checks
    lines.append(render_table(("round-trip check", "holds"), sorted(checks.items())))
    return all(checks.values()), out, "\n".join(lines)


def cmd_causal(sf: ScenarioFile, args):
    if sf.kind != "causal":
        raise UsageError("'causal' needs a causal block")
    model = sf.payload
    tol = sf.analysis.tol
    if args.principle:
        verdicts = [check(model, p, tol) for p in args.principle]
    else:
        verdicts = all_verdicts(model, tol)
    text = render_table(("principle", "verdict", "witness"), _verdict_rows(verdicts))
    return all(v.holds for v in verdicts), {"verdicts": [v.to_dict() for v in verdicts]}, text


def cmd_reconcile(sf: ScenarioFile, args):
    obj = sf.payload.phenomenon() if sf.kind == "quantum" else sf.payload
    rep = reconcile(obj, sf.analysis.tol)
    headers = ("postulate", "realist", "operationalist") + tuple(f"{name} account" for name in rep.accounts)
    lines = []
    if rep.bell_local is not None:
        lines.append(f"Bell-local: {_fmt(rep.bell_local)}")
    lines.append(render_table(headers, rep.rows()))
    if rep.all_hold:
        lines.append("all four postulates hold in some account")
    else:
        lines.append("no account satisfies all four postulates; failing: "
                     + "; ".join(f"{k}: {', '.join(v)}" for k, v in rep.failing().items()))
    return rep.all_hold, rep.to_dict(), "\n".join(lines)


def cmd_lemmas(args, seed: int):
    ids = [args.id] if args.id else sorted(LEMMAS)
    reports = [verify_lemma(i, args.trials, seed) for i in ids]
    rows = [(r.lemma, r.statement, f"{len(r.counterexamples)} counterexamples / {r.tested} tested")
            for r in reports]
    text = render_table(("lemma", "statement", "result"), rows)
    return all(r.holds for r in reports), {"lemmas": [r.to_dict() for r in reports]}, text


FILE_COMMANDS = {
    "check": cmd_check,
    "membership": cmd_membership,
    "chsh": cmd_chsh,
    "fine": cmd_fine,
    "causal": cmd_causal,
    "reconcile": cmd_reconcile,
}


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellcause", description="Bell-scenario and causal-principle checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write a JSON report to this path")
    common.add_argument("--tol", type=float, help="override the file's numeric tolerance")
    common.add_argument("--deterministic", action="store_true",
                        help="CI mode: randomized commands must be given --seed")
    common.add_argument("--seed", type=int, help="seed for randomized commands")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in FILE_COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("file", help="input file (YAML, format version 1)")
        if name == "check":
            p.add_argument("--property", action="append", choices=[x.value for x in Property])
        if name == "causal":
            p.add_argument("--principle", action="append", choices=[x.value for x in Principle])
    p = sub.add_parser("lemmas", parents=[common])
    p.add_argument("--id", type=int, choices=sorted(LEMMAS))
    p.add_argument("--trials", type=int, default=500)
    return parser


def _write_report(path, command, digest, holds, result, seed=None):
    report = {
        "tool": "bellcause",
        "version": __version__,
        "command": command,
        "input_sha256": digest,
        "holds": bool(holds),
        "result": _jsonable(result),
    }
    if seed is not None:
        report["seed"] = seed
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        if args.command == "lemmas":
            if args.trials < 1:
                raise UsageError("--trials must be positive")
            if args.seed is None:
                if args.deterministic:
                    raise SeedRequired("--deterministic requires --seed for randomized commands")
                seed = int(np.random.SeedSequence().entropy % 2**32)
            else:
                seed = args.seed
            holds, result, text = cmd_lemmas(args, seed)
            digest = hashlib.sha256(f"lemmas:{args.id}:{args.trials}:{seed}".encode()).hexdigest()
        else:
            seed = None
            with open(args.file, "rb") as fh:
                data = fh.read()
            digest = hashlib.sha256(data).hexdigest()
            sf = parse(data)
            if args.tol is not None:
                if args.tol < 0:
                    raise UsageError("--tol must be non-negative")
                sf = replace(sf, analysis=replace(sf.analysis, tol=args.tol))
            holds, result, text = FILE_COMMANDS[args.command](sf, args)
    except BellCauseError as exc:
        print(f"error [{exc.code}]: {exc}", file=stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error [E_IO]: {exc}", file=stderr)
        return EXIT_ERROR
    elapsed = time.perf_counter() - start
    print(text, file=stdout)
    print(f"\nresult: {'all hold' if holds else 'some fail'}  ({elapsed:.3f} s)", file=stdout)
    if args.out:
        try:
            _write_report(args.out, args.command, digest, holds, result, seed)
        except OSError as exc:
            print(f"error [E_IO]: {exc}", file=stderr)
            return EXIT_ERROR
    return EXIT_OK if holds else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
