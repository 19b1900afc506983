"""Command-line front end: verification suites, basis computations, vertex-map checks.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

from . import basis, qva, verify
from .fock import charge_of
from .ops.catalog import CATALOG_VERSION

REPORT_SCHEMA = "dyfock-report/1"
CACHE_ENV = "DYFOCK_CACHE_DIR"

log = logging.getLogger(__name__)


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    subcommand: str | None = None
    order: int | None = None
    window: list | None = None
    vectors: str = "small"
    seed: int = 0
    format: str = "json"
    cache_dir: str | None = None
    strict: bool = False
    options: dict = field(default_factory=dict)

    def payload_key(self) -> dict:
        """Everything that determines the report payload (output settings excluded)."""
        d = asdict(self)
        for k in ("format", "cache_dir"):
            d.pop(k)
        return d


def parse_window(text) -> list:
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        try:
            lo, hi = (int(x) for x in str(text).split(":"))
        except ValueError:
            raise UsageError("window must look like lo:hi, got %r" % (text,)) from None
    if lo > hi:
        raise UsageError("empty window %s:%s" % (lo, hi))
    return [int(lo), int(hi)]


# ----- cache ---------------------------------------------------------------------


def _vector_texts(cfg: RunConfig) -> list:
    order = max(8, (cfg.order or 2) + 2)
    return [tv.vector.to_text() for tv in verify.select_vectors(cfg.vectors, cfg.seed, 0, order)]


def cache_key(cfg: RunConfig) -> str:
    doc = {
        "catalog_version": CATALOG_VERSION,
        "schema": REPORT_SCHEMA,
        "config": cfg.payload_key(),
        "vectors": _vector_texts(cfg) if cfg.command in ("verify", "qva") else [],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def cached(cfg: RunConfig, compute):
    """Report payload from the cache directory, or computed and stored."""
    if not cfg.cache_dir:
        return compute()
    os.makedirs(cfg.cache_dir, exist_ok=True)
    path = os.path.join(cfg.cache_dir, cache_key(cfg) + ".json")
    if os.path.exists(path):
        with open(path) as fh:
            log.debug("cache hit %s", path)
            return json.load(fh)
    payload = compute()
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    os.replace(tmp, path)
    return payload


# ----- commands --------------------------------------------------------------------


def _vectors(cfg: RunConfig, order: int):
    tvs = verify.select_vectors(cfg.vectors, cfg.seed, 0, order)
    if cfg.strict:
        for tv in tvs:
            for (_, p) in tv.vector.terms:
                if charge_of(p, 0) is None:
                    raise UsageError("vector %s leaves sector 0" % tv.name)
    return tvs


def _results(reports) -> dict:
    rows = [r.to_dict() for r in reports]
    return {"results": rows, "passed": all(r["passed"] for r in rows)}


def cmd_verify(cfg: RunConfig) -> dict:
    rel = cfg.options.get("rel", "all")
    if rel != "all" and rel not in verify.SUITES:
        raise UsageError("unknown relation set %r" % rel)
    if cfg.vectors not in verify.BATTERIES:
        raise UsageError("unknown vector selector %r" % cfg.vectors)
    N = cfg.order or 2
    _vectors(cfg, max(8, N + 2))
    reports = verify.run_suite(rel, N, cfg.window, cfg.vectors, cfg.seed)
    return _results(reports)


def cmd_basis(cfg: RunConfig) -> dict:
    sub, o = cfg.subcommand, cfg.options
    dmax = o.get("max_degree")
    if sub == "enumerate":
        dmax = 6 if dmax is None else dmax
        idx = basis.enumerate_basis(dmax, o.get("max_charge"), o.get("flavor", "x"))
        return {"monomials": [dict(i.to_dict(), text=i.to_text()) for i in idx], "count": len(idx), "passed": True}
    if sub == "straighten":
        if not o.get("modes"):
            raise UsageError("straighten needs --modes")
        try:
            modes = basis.parse_modes(o["modes"])
        except ValueError as e:
            raise UsageError(str(e)) from None
        m = cfg.order or 1
        idx = basis.MonomialIndex("xbar", modes)
        comb = basis.straighten(idx, m)
        ok = comb.evaluate() == basis.evaluate_monomial(idx, m)
        return {"source": idx.to_dict(), "combination": comb.to_dict(), "text": _comb_text(comb), "passed": ok}
    if sub == "char":
        dmax = 12 if dmax is None else dmax
        table = basis.CharacterTable.build(dmax)
        return {"table": table.records(), "csv": table.to_csv(), "passed": table.consistent()}
    if sub == "rank":
        dmax = 6 if dmax is None else dmax
        rows = []
        for d in range(dmax + 1):
            for n in range(0, d + 1):
                r, want = basis.classical_rank(d, n)
                if want or r:
                    rows.append({"kind": "classical", "degree": d, "charge": n, "rank": r, "expected": want})
        hmax = o.get("heis_degree", 4)
        for D in range(hmax + 1):
            for n in range(0, D + 1):
                r, want = basis.heisenberg_rank(D, n)
                if want or r:
                    rows.append({"kind": "heisenberg", "degree": D, "charge": n, "rank": r, "expected": want})
        return {"ranks": rows, "passed": all(x["rank"] == x["expected"] for x in rows)}
    if sub == "stage":
        dmax = 5 if dmax is None else dmax
        N = cfg.order or 2
        rows = []
        for i in (0, 1):
            for m in (0, 1, 2):
                for b in basis.enumerate_basis(dmax, flavor="xtilde"):
                    rows.append({"sector": i, "m": m, "modes": list(b.modes), "passed": basis.check_stage(i, m, b, N)})
        tails = [{"sector": i, "k": k, "modes": list(basis.descent_tail(i, k)), "parity": basis.tail_parity(i),
                  "passed": basis.check_tail(i, k, N)} for i in (0, 1) for k in (1, 2, 3)]
        return {"stages": rows, "tails": tails, "passed": all(r["passed"] for r in rows + tails)}
    raise UsageError("unknown basis subcommand %r" % sub)


def _comb_text(comb) -> str:
    if not comb.terms:
        return "0"
    return " + ".join("(%s) %s" % (t["coeff"], t["text"]) for t in comb.to_dict()["terms"])


def cmd_qva(cfg: RunConfig) -> dict:
    sub, o = cfg.subcommand, cfg.options
    if cfg.vectors not in verify.BATTERIES:
        raise UsageError("unknown vector selector %r" % cfg.vectors)
    if sub == "restricted":
        N = cfg.order or 3
        tvs = _vectors(cfg, max(8, N + 2))
        return _results([qva.check_restricted(tvs, N)])
    if sub == "ymap":
        N = cfg.order or 2
        win = cfg.window or [-3, 3]
        tvs = _vectors(cfg, max(8, N + 2))
        reports = [qva.check_vacuum_axiom(tvs, tuple(win), N), qva.check_k_state(tvs[:2], tuple(win), N)]
        out = _results(reports)
        if o.get("entries"):
            st = _state(o["entries"], o.get("powers"))
            out["coefficients"] = {
                tv.name: {str(m): w.to_text() for m, w in sorted(qva.y_module_map(st, tv.at(N), tuple(win), N).items())}
                for tv in tvs
            }
            out["state"] = st.to_dict()
        return out
    if sub == "classical":
        win = cfg.window or [-2, 2]
        tvs = _vectors(cfg, 8)
        return _results([qva.check_normal_ordered_limit(qva.classical_states(), tvs, tuple(win))])
    raise UsageError("unknown qva subcommand %r" % sub)


def _state(entries: str, powers) -> "qva.StateSpec":
    try:
        es = tuple((int(e[0]), int(e[1])) for e in entries.split(","))
        ps = tuple(int(p) for p in powers.split(",")) if powers else (0,) * len(es)
        return qva.StateSpec(es, ps)
    except (ValueError, IndexError) as e:
        raise UsageError("bad state %r: %s" % (entries, e)) from None


COMMANDS = {"verify": cmd_verify, "basis": cmd_basis, "qva": cmd_qva}


# ----- argument handling ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", "-N", type=int, help="truncation order N (work mod h^N)")
    common.add_argument("--window", help="exponent window lo:hi")
    common.add_argument("--vectors", choices=verify.BATTERIES, help="test vector selector")
    common.add_argument("--seed", type=int, help="seed for random test vectors")
    common.add_argument("--format", choices=("json", "text", "csv"), help="report format")
    common.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    common.add_argument("--cache-dir", help="report cache directory (default $%s)" % CACHE_ENV)
    common.add_argument("--strict", action="store_true", default=None, help="reject vectors outside sector 0")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    p = argparse.ArgumentParser(prog="dyfock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", parents=[common], help="run relation suites")
    pv.add_argument("--rel", default=None, help="one of %s or all" % ", ".join(verify.SUITES))

    pb = sub.add_parser("basis", parents=[common], help="monomial bases and characters")
    pb.add_argument("subcommand", choices=("enumerate", "straighten", "char", "rank", "stage"))
    pb.add_argument("--max-degree", type=int)
    pb.add_argument("--max-charge", type=int)
    pb.add_argument("--flavor", choices=sorted(basis.FLAVORS))
    pb.add_argument("--modes", help="comma-separated modes, rightmost factor first, e.g. -1,-3")
    pb.add_argument("--heis-degree", type=int)

    pq = sub.add_parser("qva", parents=[common], help="vertex-operator map checks")
    pq.add_argument("subcommand", choices=("restricted", "ymap", "classical"))
    pq.add_argument("--entries", help="matrix entries per leg, e.g. 12 or 21,12")
    pq.add_argument("--powers", help="u-powers per leg, e.g. 0,1")
    return p


_OPTION_KEYS = ("rel", "max_degree", "max_charge", "flavor", "modes", "heis_degree", "entries", "powers")


def make_config(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError("cannot read config %s: %s" % (args.config, e)) from None
        if not isinstance(base, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(base) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError("unknown config fields: %s" % ", ".join(sorted(unknown)))
    opts = dict(base.get("options") or {})
    for k in _OPTION_KEYS:
        val = getattr(args, k, None)
        if val is not None:
            opts[k] = val
    cfg = RunConfig(
        command=args.command,
        subcommand=getattr(args, "subcommand", None),
        order=args.order if args.order is not None else base.get("order"),
        window=base.get("window"),
        vectors=args.vectors or base.get("vectors", "small"),
        seed=args.seed if args.seed is not None else base.get("seed", 0),
        format=args.format or base.get("format", "json"),
        cache_dir=args.cache_dir or base.get("cache_dir") or os.environ.get(CACHE_ENV),
        strict=bool(args.strict if args.strict is not None else base.get("strict", False)),
        options=opts,
    )
    if args.window is not None:
        cfg.window = parse_window(args.window)
    elif cfg.window is not None:
        cfg.window = parse_window(cfg.window)
    if cfg.order is not None and cfg.order < 1:
        raise UsageError("order must be >= 1")
    if cfg.command == "verify" and "rel" not in cfg.options:
        cfg.options["rel"] = "all"
    return cfg


def render(cfg: RunConfig, payload: dict) -> str:
    report = {"schema": REPORT_SCHEMA, "config": cfg.payload_key(), **payload}
    if cfg.format == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    if cfg.format == "csv":
        if "csv" in payload:
            return payload["csv"].rstrip("\n")
        rows = payload.get("results") or payload.get("ranks") or payload.get("stages") or []
        if not rows:
            return ""
        keys = sorted({k for r in rows for k in r})
        lines = [",".join(keys)]
        for r in rows:
            lines.append(",".join(json.dumps(r.get(k), sort_keys=True).replace(",", ";") for k in keys))
        return "\n".join(lines)
    lines = []
    for r in payload.get("results", []):
        lines.append("%s %s: %s (%d discrepancies)" % (r["relation"], json.dumps(r["params"], sort_keys=True, default=str)[:80],
                                                    "passed" if r["passed"] else "FAILED", r["discrepancy_count"]))
    if "text" in payload:
        lines.append(payload["text"])
    if "monomials" in payload:
        lines.extend(m["text"] for m in payload["monomials"])
    if "table" in payload:
        lines.append(payload["csv"].rstrip("\n"))
    for key in ("ranks", "stages", "tails"):
        for r in payload.get(key, []):
            lines.append(json.dumps(r, sort_keys=True))
    lines.append("passed" if payload.get("passed") else "FAILED")
    return "\n".join(lines)


def _join_negative_values(argv):
    """Let ``--modes -1,-3`` through argparse, which would read -1,-3 as a flag."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--modes", "--window"):
            val = next(it, None)
            out.append(tok if val is None else "%s=%s" % (tok, val))
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = make_config(args)
        payload = cached(cfg, lambda: COMMANDS[cfg.command](cfg))
    except UsageError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    print(render(cfg, payload))
    return 0 if payload.get("passed") else 1


if __name__ == "__main__":
    sys.exit(main())
