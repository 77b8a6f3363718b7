"""
Command-line front end: ``ruth COMMAND FILE [flags]``.

Every command prints a report (a table, or JSON with ``--format json``) and
exits 0 when all of its checks hold, 1 when a check fails or a computation's
precondition is not met, and 2 on unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable

from . import __version__
from .errors import RuthError, SchemaError
from .homotopy import invert_quasi_iso, transfer_to_cohomology
from .io import Workspace, load, morphism_to_raw, rep_to_raw
from .operations import dualize, hom_complex, mapping_cone, pullback
from .rep import cohomology, verify_morphism, verify_structure
from .resolution import banal_check, check_resolution
from .spectral import e2_compare, pages, vanishing_check

REPORT_SCHEMA = "ruth-report/1"

COMMANDS = ("validate", "cohomology", "pages", "e2", "dual", "cone", "pullback", "transfer",
            "invert", "vanish", "resolve", "banal", "hom", "tasks")


class UsageError(Exception):
    pass


def parse_degrees(text: str) -> list[int]:
    """'n0..n1' (inclusive) or a single integer."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError("degrees must look like n0..n1, got %r" % text) from None
    if lo > hi:
        raise UsageError("empty degree window %r" % text)
    return list(range(lo, hi + 1))


def _default_degrees(E, opts) -> list[int]:
    if opts.get("degrees") is not None:
        return opts["degrees"]
    return list(range(-2, E.bundle.b + 4))


def _dims_table(title, H: dict):
    ns = sorted(H)
    return (title, ["n"] + [str(n) for n in ns], [["dim"] + [H[n] for n in ns]])


def _bigraded_table(title, dims: dict, degrees):
    if not dims:
        return (title, ["q \\ p"], [])
    ps = sorted({p for p, q in dims} | {0})
    qs = sorted({q for p, q in dims})
    rows = [[q] + [dims.get((p, q), ".") for p in ps] for q in reversed(qs)]
    return (title, ["q \\ p"] + [str(p) for p in ps], rows)


def _hstr(H: dict) -> dict:
    return {str(n): v for n, v in sorted(H.items())}


def _pqstr(d: dict) -> dict:
    return {"%d,%d" % k: v for k, v in sorted(d.items())}


# ---------------------------------------------------------------------------
# commands: each returns (checks, results, tables)


def cmd_validate(W: Workspace, opts):
    checks, results = {}, {"reps": {}, "morphisms": {}}
    for name, E in W.reps.items():
        rep = verify_structure(E)
        checks["rep %s" % name] = rep.ok
        checks["rep %s: both checks agree" % name] = rep.agree
        d = rep.to_dict()
        d["unitality"] = E.unitality_class()
        results["reps"][name] = d
    for name, P in W.morphisms.items():
        rep = verify_morphism(P)
        checks["morphism %s" % name] = rep.ok
        checks["morphism %s: both checks agree" % name] = rep.agree
        results["morphisms"][name] = rep.to_dict()
    rows = [[k, "ok" if v else "FAIL"] for k, v in checks.items()]
    return checks, results, [("validation", ["item", "status"], rows)]


def cmd_cohomology(W, opts):
    E = W.rep(opts.get("rep"))
    degs = _default_degrees(E, opts)
    H = cohomology(E, degs, threads=opts.get("threads", 1))
    return {}, {"cohomology": _hstr(H)}, [_dims_table("H^n(G;%s)" % (E.name or "E"), H)]


def cmd_pages(W, opts):
    E = W.rep(opts.get("rep"))
    degs = _default_degrees(E, opts)
    R = pages(E, r_max=opts.get("pages", 3), degrees=degs, threads=opts.get("threads", 1))
    tables, res = [], {"pages": {}, "limit": _pqstr(R.limit.dims), "cohomology": _hstr(R.cohomology)}
    window = set(degs)
    for P in R.pages:
        dims = {k: v for k, v in P.dims.items() if sum(k) in window}
        res["pages"][str(P.r)] = _pqstr(dims)
        tables.append(_bigraded_table("E_%d" % P.r, dims, degs))
    tables.append(_bigraded_table("E_inf", {k: v for k, v in R.limit.dims.items() if sum(k) in window}, degs))
    return dict(R.checks), res, tables


def cmd_e2(W, opts):
    E = W.rep(opts.get("rep"))
    degs = _default_degrees(E, opts)
    R = e2_compare(E, degs)
    res = {"E2": _pqstr(R.pages), "H(G;H(E))": _pqstr(R.cohomology_of_cohomology)}
    return dict(R.checks), res, [_bigraded_table("E_2 from pages", R.pages, degs),
                                 _bigraded_table("H^p(G; H^q(E))", R.cohomology_of_cohomology, degs)]


def cmd_dual(W, opts):
    E = W.rep(opts.get("rep"))
    Ed = dualize(E)
    degs = _default_degrees(E, opts)
    H = cohomology(E, degs, threads=opts.get("threads", 1))
    Hd = cohomology(Ed, [-n for n in degs], threads=opts.get("threads", 1))
    checks = {"dual is a representation": verify_structure(Ed).ok,
              "double dual = E": dualize(Ed) == E,
              "H^n(E) = H^-n(E*)": all(H[n] == Hd[-n] for n in degs)}
    res = {"dual": rep_to_raw(Ed), "cohomology": _hstr(H), "dual_cohomology": _hstr(Hd)}
    return checks, res, [_dims_table("H^n(G;E)", H), _dims_table("H^n(G;E*)", Hd)]


def cmd_cone(W, opts):
    Phi = W.morphism(opts.get("morphism"))
    C = mapping_cone(Phi)
    degs = _default_degrees(C, opts)
    H = cohomology(C, degs, threads=opts.get("threads", 1))
    checks = {"cone is a representation": verify_structure(C).ok}
    return checks, {"cone": rep_to_raw(C), "cohomology": _hstr(H)}, [_dims_table("H^n(G;Cone)", H)]


def cmd_pullback(W, opts):
    E = W.rep(opts.get("rep"))
    f = W.functor(opts.get("functor"))
    Ep = pullback(f, E)
    degs = _default_degrees(E, opts)
    H = cohomology(Ep, degs, threads=opts.get("threads", 1))
    checks = {"pullback is a representation": verify_structure(Ep).ok,
              "unitality preserved": E.unitality_class() != "unital" or Ep.unitality_class() == "unital"}
    return checks, {"pullback": rep_to_raw(Ep), "cohomology": _hstr(H)}, [_dims_table("H^n(H; f*E)", H)]


def cmd_transfer(W, opts):
    E = W.rep(opts.get("rep"))
    degs = opts.get("degrees")
    T = transfer_to_cohomology(E, degrees=degs)
    checks = dict(T.checks)
    checks["Phi is invertible up to homotopy"] = invert_quasi_iso(T.Phi).ok
    res = {"H(E)": rep_to_raw(T.target)}
    rows = [[T.target.G.objects[x], l, n] for (x, l), n in sorted(T.target.bundle.dims().items())]
    return checks, res, [("fiber cohomology H(E)", ["object", "degree", "dim"], rows)]


def cmd_invert(W, opts):
    Phi = W.morphism(opts.get("morphism"))
    Q = invert_quasi_iso(Phi, degrees=opts.get("degrees"))
    res = {"Psi": morphism_to_raw(Q.Psi, "F", "E")}
    rows = [[k, "ok" if v else "FAIL"] for k, v in Q.checks.items()]
    return dict(Q.checks), res, [("homotopy inverse", ["identity", "status"], rows)]


def cmd_vanish(W, opts):
    E = W.rep(opts.get("rep"))
    degs = _default_degrees(E, opts)
    V = vanishing_check(E, degrees=degs, threads=opts.get("threads", 1))
    res = {"amplitude": list(V.amplitude), "cohomology": _hstr(V.cohomology), "kappa_cases": V.kappa_cases}
    return dict(V.checks), res, [_dims_table("H^n(G;E), amplitude [%d,%d]" % V.amplitude, V.cohomology)]


def cmd_resolve(W, opts):
    E = W.rep(opts.get("rep"))
    degs = opts.get("degrees") or list(range(E.bundle.a, E.bundle.b + 2))
    R = check_resolution(E, levels=opts.get("levels", 2), degrees=degs, threads=opts.get("threads", 1))
    ms = sorted({m for m, n in R.grid})
    rows = [[n] + [R.grid[m, n] for m in ms] for n in reversed(degs)]
    res = {"grid": {"%d,%d" % k: v for k, v in sorted(R.grid.items())},
           "row_cohomology": {"%d,%d" % k: v for k, v in sorted(R.row_cohomology.items())},
           "edge": {str(m): v for m, v in R.edge.items()}}
    return dict(R.checks), res, [("dim C(G^(m);E)^n", ["n \\ m"] + [str(m) for m in ms], rows)]


def cmd_banal(W, opts):
    P = W.gspace(opts.get("gspace"))
    R = banal_check(P, degrees=opts.get("degrees"), threads=opts.get("threads", 1))
    res = {"orbits": R.orbits, "cohomology": _hstr(R.cohomology), "expected": _hstr(R.expected)}
    return dict(R.checks), res, [_dims_table("H^n(G x P; pi*F)", R.cohomology)]


def cmd_hom(W, opts):
    E = W.rep(opts.get("rep"))
    F = W.rep(opts.get("target") or opts.get("rep"))
    Hc = hom_complex(E, F)
    degs = opts.get("degrees") or [-1, 0, 1]
    H = Hc.cohomology(degs)
    sq = all((Hc.matrix(l + 1) @ Hc.matrix(l)).is_zero() for l in degs)
    return {"D^2 = 0 on Hom": sq}, {"hom_cohomology": _hstr(H)}, [_dims_table("H^l Hom(E,F); [E,F] = H^0", H)]


HANDLERS: dict[str, Callable] = {
    "validate": cmd_validate, "cohomology": cmd_cohomology, "pages": cmd_pages, "e2": cmd_e2,
    "dual": cmd_dual, "cone": cmd_cone, "pullback": cmd_pullback, "transfer": cmd_transfer,
    "invert": cmd_invert, "vanish": cmd_vanish, "resolve": cmd_resolve, "banal": cmd_banal, "hom": cmd_hom,
}


# ---------------------------------------------------------------------------
# running and reporting


def run(command: str, W: Workspace, opts: dict) -> tuple[dict, int]:
    """Report document and exit status for one command."""
    if command == "tasks":
        subs, status = [], 0
        for t in W.tasks:
            t = dict(t)
            sub_opts = dict(opts)
            for key in ("rep", "morphism", "functor", "gspace", "target", "pages", "levels", "threads"):
                if key in t:
                    sub_opts[key] = t[key]
            if "degrees" in t:
                d = t["degrees"]
                sub_opts["degrees"] = list(range(d[0], d[1] + 1)) if isinstance(d, list) else parse_degrees(str(d))
            rep, code = run(t["command"], W, sub_opts)
            subs.append(rep)
            status = max(status, code)
        return {"schema": REPORT_SCHEMA, "command": "tasks", "ok": status == 0, "tasks": subs}, status
    if command not in HANDLERS:
        raise UsageError("unknown command %r" % command)
    try:
        checks, results, tables = HANDLERS[command](W, opts)
    except SchemaError:
        raise
    except RuthError as e:
        doc = {"schema": REPORT_SCHEMA, "command": command, "ok": False,
               "error": {"type": type(e).__name__, "message": str(e)}}
        return doc, 1
    ok = all(checks.values())
    doc = {"schema": REPORT_SCHEMA, "command": command, "ok": ok,
           "checks": checks, "results": results, "tables": [_table_json(t) for t in tables]}
    return doc, 0 if ok else 1


def _table_json(t):
    title, header, rows = t
    return {"title": title, "header": header, "rows": rows}


def format_table(doc: dict) -> str:
    out = []
    if doc.get("command") == "tasks":
        for sub in doc["tasks"]:
            out.append(format_table(sub))
        out.append("tasks: %s" % ("ok" if doc["ok"] else "FAILED"))
        return "\n".join(out)
    out.append("== %s ==" % doc["command"])
    if "error" in doc:
        out.append("error: %s: %s" % (doc["error"]["type"], doc["error"]["message"]))
    for t in doc.get("tables", []):
        out.append(t["title"])
        cells = [t["header"]] + [[str(c) for c in r] for r in t["rows"]]
        widths = [max(len(str(r[i])) if i < len(r) else 0 for r in cells) for i in range(len(t["header"]))]
        for r in cells:
            out.append("  " + "  ".join(str(c).rjust(w) for c, w in zip(r, widths)))
    for k, v in doc.get("checks", {}).items():
        out.append("  [%s] %s" % ("ok" if v else "FAIL", k))
    out.append("result: %s" % ("ok" if doc["ok"] else "FAILED"))
    return "\n".join(out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ruth", description="Representations up to homotopy of finite groupoids.")
    p.add_argument("--version", action="version", version="ruth %s" % __version__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", help="workspace document (JSON)")
    p.add_argument("--degrees", help="degree window n0..n1")
    p.add_argument("--pages", type=int, default=3, help="last spectral page to compute")
    p.add_argument("--levels", type=int, default=2, help="top resolution level")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", help="also write the JSON report to this path")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--rep", help="representation name")
    p.add_argument("--target", help="second representation (hom)")
    p.add_argument("--morphism", help="morphism name")
    p.add_argument("--functor", help="functor name (pullback)")
    p.add_argument("--gspace", help="G-space name (banal)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        opts = {"rep": args.rep, "target": args.target, "morphism": args.morphism, "functor": args.functor,
                "gspace": args.gspace, "pages": args.pages, "levels": args.levels, "threads": max(1, args.threads)}
        if args.degrees:
            opts["degrees"] = parse_degrees(args.degrees)
        W = load(args.file)
        doc, status = run(args.command, W, opts)
    except (OSError, UnicodeDecodeError) as e:
        print("ruth: cannot read %s: %s" % (args.file, e), file=sys.stderr)
        return 2
    except (RuthError, UsageError) as e:
        print("ruth: invalid input: %s" % e, file=sys.stderr)
        return 2
    text = json.dumps(doc, indent=1) if args.format == "json" else format_table(doc)
    print(text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
    return status


if __name__ == "__main__":
    sys.exit(main())
