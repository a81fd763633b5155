"""Command line entry point: ``rightsmarket <verb> ...``.

Exit codes
    0  every enabled check passed
    2  bad command line (argparse)
    3  unreadable or malformed input
    4  endowments fail a validity clause
    5  the solver aborted
    6  a solution failed verification
    7  a crisis guarantee was violated (only with ``--strict``)
    8  a trace did not replay to its recorded solution
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence, TextIO

from rightsmarket.auction import InvalidEndowments, ReplayMismatch, SolverAbort, replay, solve
from rightsmarket.codec import (ParseError, decode, dumps_line, encode, fmt, solution_from_dict,
                                solution_to_dict)
from rightsmarket.crisis import CrisisError, CrisisSpec, check_theorem3, iter_crisis
from rightsmarket.frustration import market_frustration_report
from rightsmarket.oracle import verify_solution
from rightsmarket.scenario import Scenario, generate_instance, load_scenario

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_INVALID = 4
EXIT_SOLVER = 5
EXIT_VERIFY = 6
EXIT_THEOREM = 7
EXIT_REPLAY = 8


def _dump(obj: Any) -> str:
    return json.dumps(encode(obj), indent=2, sort_keys=True) + "\n"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, Fraction) else ("" if v is None else v) for v in row])
    return buf.getvalue()


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(h) for h in header]]
    for row in rows:
        cells.append(["-" if v is None else str(fmt(v) if isinstance(v, Fraction) else v) for v in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


BUYER_COLUMNS = ("buyer", "assigned", "acquired", "f", "pf")


def cmd_solve(args, stdout: TextIO) -> int:
    sc = load_scenario(args.scenario)
    res = solve(sc.market)
    rep = verify_solution(sc.market, res.solution, res.stats)
    frus = market_frustration_report(sc.market, res.solution, res.trace)
    rows = [(r.buyer, r.assigned, r.acquired, r.f, r.pf) for r in frus]
    report = {
        "scenario": sc.to_dict(),
        "solution": solution_to_dict(res.solution),
        "stats": res.stats.as_dict(),
        "verification": {"ok": rep.ok, "failures": [[f.check, f.detail] for f in rep.failures]},
        "frustration": [dict(zip(BUYER_COLUMNS, r)) | {"acquired_with_initial_money": x.acquired_with_initial_money}
                        for r, x in zip(rows, frus)],
    }
    out = Path(args.out) if args.out else None
    if args.format == "csv":
        _write(out, "report.csv", _csv(BUYER_COLUMNS, rows))
    else:
        _write(out, "report.json", _dump(report))
    _write(out, "solution.json", _dump(report["solution"]))
    _write(out, "trace.jsonl", "".join(dumps_line(ev) + "\n" for ev in res.trace))
    s = res.solution
    stdout.write(f"p = {fmt(s.price_good)}  q = {fmt(s.price_right)}  "
                 f"iterations = {res.stats.iterations}  steps = {res.stats.steps}\n")
    stdout.write(_table(BUYER_COLUMNS, rows))
    stdout.write("verification: " + ("ok" if rep.ok else "FAILED " + ", ".join(sorted(rep.failed_checks())))
                 + "\n")
    return EXIT_OK if rep.ok else EXIT_VERIFY


CRISIS_COLUMNS = ("tau", "buyer", "assigned", "acquired", "f", "willingness", "rights_sold", "proceeds")


def _round_dict(rec) -> dict:
    return {
        "tau": rec.tau,
        "p": rec.price_good,
        "q": rec.price_right,
        "c": rec.price_couple,
        "baskets": {t: [b.good, b.rights, b.money] for t, b in sorted(rec.baskets.items())},
        "assigned": rec.assigned,
        "rights_sold": rec.rights_sold,
        "rights_proceeds": rec.rights_proceeds,
        "willingness": rec.willingness,
        "frustration": rec.frustration,
    }


def cmd_crisis(args, stdout: TextIO) -> int:
    sc = load_scenario(args.scenario)
    spec = CrisisSpec(sc.market, sc.rounds, sc.market.mode, sc.market.mechanism)
    out = Path(args.out) if args.out else None
    stream = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        stream = (out / "crisis.jsonl").open("w")
    records, rows = [], []
    try:
        for rec in iter_crisis(spec):
            records.append(rec)
            if stream is not None:
                stream.write(dumps_line(_round_dict(rec)) + "\n")
                stream.flush()
            for b in sorted(rec.assigned):
                rows.append((rec.tau, b, rec.assigned[b], rec.baskets[b].good, rec.frustration[b],
                             rec.willingness[b], rec.rights_sold[b], rec.rights_proceeds[b]))
            stdout.write(f"round {rec.tau}: c = {float(rec.price_couple):.6g}  "
                         f"max f = {fmt(max(rec.frustration.values()))}\n")
    finally:
        if stream is not None:
            stream.close()
    violations = check_theorem3(records)
    report = {
        "scenario": sc.to_dict(),
        "rounds": [_round_dict(r) for r in records],
        "violations": [[v.tau, v.buyer, v.clause, v.detail] for v in violations],
    }
    if args.format == "csv":
        _write(out, "report.csv", _csv(CRISIS_COLUMNS, rows))
    else:
        _write(out, "report.json", _dump(report))
    stdout.write(_table(CRISIS_COLUMNS, rows))
    for v in violations:
        stdout.write(f"violation: round {v.tau} buyer {v.buyer} [{v.clause}] {v.detail}\n")
    stdout.write(f"crisis checks: {'ok' if not violations else f'{len(violations)} violation(s)'}\n")
    return EXIT_THEOREM if violations and args.strict else EXIT_OK


def cmd_gen(args, stdout: TextIO) -> int:
    spec = generate_instance(args.seed, args.buyers, args.sellers, args.vmax, dmax=args.dmax,
                             epsilon=Fraction(args.epsilon), mode=args.mode, mechanism=args.mechanism)
    text = _dump(Scenario(kind="market", market=spec, seed=args.seed).to_dict())
    if args.out:
        _write(Path(args.out), "scenario.json", text)
    else:
        stdout.write(text)
    return EXIT_OK


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}", exc.msg) from None


def cmd_verify(args, stdout: TextIO) -> int:
    doc = _load_json(args.solution)
    if isinstance(doc, dict) and "solution" in doc:
        doc = doc["solution"]
    try:
        sol = solution_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(args.solution, f"not a solution document ({exc})") from None
    sc = load_scenario(args.scenario)
    rep = verify_solution(sc.market, sol)
    for f in rep.failures:
        stdout.write(f"{f.check}: {f.detail}\n")
    stdout.write("verification: " + ("ok" if rep.ok else "FAILED") + "\n")
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_replay(args, stdout: TextIO) -> int:
    events = []
    for n, line in enumerate(Path(args.trace).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            events.append(decode(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {n}", exc.msg) from None
    res = replay(events)
    s = res.solution
    stdout.write(f"replayed {len(events)} events: p = {fmt(s.price_good)}  q = {fmt(s.price_right)}\n")
    if args.out:
        _write(Path(args.out), "solution.json", _dump(solution_to_dict(s)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rightsmarket", description="Markets with buying rights.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, fmt_flag=True):
        p.add_argument("--out", metavar="DIR", help="directory for report files")
        if fmt_flag:
            p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--strict", action="store_true", help="fail on any crisis check violation")

    p = sub.add_parser("solve", help="solve a market scenario")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("crisis", help="run a multi-round crisis scenario")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_crisis)

    p = sub.add_parser("gen", help="generate a random valid market scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--buyers", type=int, required=True)
    p.add_argument("--sellers", type=int, required=True)
    p.add_argument("--vmax", type=int, required=True)
    p.add_argument("--dmax", type=int)
    p.add_argument("--epsilon", default="1/10")
    p.add_argument("--mode", choices=("unrestricted", "restricted"), default="unrestricted")
    p.add_argument("--mechanism", default="proportional")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check a solution against its scenario")
    p.add_argument("solution")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-run a trace and compare with its recorded solution")
    p.add_argument("trace")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    stdout = stdout or sys.stdout
    try:
        return args.func(args, stdout)
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidEndowments as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CrisisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc.cause, InvalidEndowments) else EXIT_SOLVER
    except SolverAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ReplayMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REPLAY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
