"""Command-line front end: ``hyptrace <command> [options]``.

Exit codes: 0 success, 1 negative certificate verdict, 2 budget exceeded,
3 invalid configuration, 4 wrong regime (finite class), 5 insufficient data.
"""

from __future__ import annotations

import argparse
import ast
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .algebra import rd_ratio_estimate
from .cayley import BudgetExceeded, GrowthSeries, SeriesTooShort, cached_ball, growth_classify
from .conjugacy import conjugacy_orbit
from .fc import fc_report
from .groups import FiniteGroup, FreeGroup, InvalidBackend, cyclic, load_table, preset
from .traces import FiniteClassError, InsufficientData, trace_space_basis, vanishing_certificate

EXIT_OK, EXIT_VERDICT, EXIT_BUDGET, EXIT_CONFIG, EXIT_REGIME, EXIT_DATA = 0, 1, 2, 3, 4, 5
CACHE_ENV = "HYPTRACE_CACHE"


class ConfigError(ValueError):
    pass


_UNITS = {
    "backend": "preset name, free:<rank>, cyclic:<n> or table:<path>",
    "radius": "ball radius, word length",
    "L": "class length horizon, word length",
    "trace_horizon": "word length",
    "element": "generator tokens",
    "s": "Sobolev exponent",
    "max_n": "support radius, word length",
    "samples": "samples per n",
    "seed": "integer",
    "memory_budget": "bytes",
    "iterations": "power iteration cap",
    "orbit_budget": "orbit elements",
    "out": "directory",
    "cache_dir": "directory, empty for none",
}


@dataclass
class RunConfig:
    backend: str = "free2"
    radius: int = 10
    L: int = 21
    trace_horizon: int = 4
    element: str = "x"
    s: float = 2.0
    max_n: int = 8
    samples: int = 200
    seed: int = 0
    memory_budget: int = 2 * 1024**3
    iterations: int = 10_000
    orbit_budget: int = 512
    out: str = "."
    cache_dir: str = ""

    def validate(self) -> "RunConfig":
        for k in ("radius", "L", "trace_horizon", "max_n", "seed"):
            if getattr(self, k) < 0:
                raise ConfigError(f"{k} must be >= 0")
        for k in ("samples", "memory_budget", "iterations", "orbit_budget"):
            if getattr(self, k) <= 0:
                raise ConfigError(f"{k} must be positive")
        if self.s < 0:
            raise ConfigError("s must be >= 0")
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}  # {_UNITS[f.name]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        known = {f.name: f.type for f in fields(cls)}
        vals = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = _strip_comment(raw)
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in known:
                raise ConfigError(f"line {n}: unknown setting {key!r}")
            vals[key] = _coerce(key, value, known[key])
        return cls(**vals).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        d = self.to_dict()
        d.pop("out")
        d.pop("cache_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _strip_comment(raw: str) -> str:
    # string values are written with repr, so a '#' inside quotes belongs to the value
    s = raw.strip()
    key, _, rest = s.partition("=")
    rest = rest.strip()
    if rest and rest[0] in "'\"":
        q = rest[0]
        end = rest.index(q, 1)
        return f"{key}= {rest[: end + 1]}"
    return s.split("#", 1)[0].strip()


def _coerce(key, value, typ):
    try:
        if value[:1] in ("'", '"'):
            value = ast.literal_eval(value)
        if typ in ("int", int):
            return int(value)
        if typ in ("float", float):
            return float(value)
        return str(value)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def build_backend(spec: str):
    try:
        if ":" in spec:
            kind, _, arg = spec.partition(":")
            if kind == "free":
                return FreeGroup(int(arg))
            if kind == "cyclic":
                return cyclic(int(arg))
            if kind == "table":
                return FiniteGroup(load_table(arg))
            raise InvalidBackend(f"unknown backend kind {kind!r}")
        return preset(spec)
    except (InvalidBackend, ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output


class Writer:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg, self.command = cfg, command
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def header(self) -> str:
        return f"# hyptrace {__version__} command={self.command} config={self.cfg.hash}\n"

    def csv(self, name: str, body: str, note: str = ""):
        p = self.dir / name
        p.write_text(self.header() + (f"# {note}\n" if note else "") + body)
        self.written.append(p)

    def json(self, name: str, payload: dict):
        doc = {"tool": "hyptrace", "version": __version__, "command": self.command,
               "config_hash": self.cfg.hash, "config": {k: v for k, v in self.cfg.to_dict().items()
                                                        if k not in ("out", "cache_dir")},
               **payload}
        p = self.dir / name
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.written.append(p)


def _cache_dir(cfg: RunConfig):
    return cfg.cache_dir or os.environ.get(CACHE_ENV) or None


def _element(G, text: str):
    try:
        return G.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_growth(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    out = Writer(cfg, "growth")
    partial, code = False, EXIT_OK
    try:
        ball = cached_ball(G, cfg.radius, _cache_dir(cfg), cfg.memory_budget)
        counts = ball.sphere_counts()
    except BudgetExceeded as exc:
        counts = exc.partial.sphere_counts() if exc.partial is not None else [1]
        partial, code = True, EXIT_BUDGET
        print(f"budget exceeded: {exc}; counts up to radius {len(counts) - 1} written", file=sys.stderr)
    series = GrowthSeries(tuple(counts), label=cfg.backend)
    out.csv("growth.csv", series.to_csv(), f"partial: radius reached {len(counts) - 1}" if partial else "")
    try:
        verdict = growth_classify(series).to_dict()
    except SeriesTooShort as exc:
        verdict = {"kind": "insufficient", "reason": str(exc)}
        code = code or EXIT_DATA
    out.json("growth.json", {"partial": partial, "radius_reached": len(counts) - 1, "verdict": verdict})
    print(f"growth {cfg.backend}: {verdict['kind']}")
    return code


def cmd_conjgrowth(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    a = _element(G, cfg.element)
    out = Writer(cfg, "conjgrowth")
    prof = conjugacy_orbit(G, a, max(cfg.L, G.length(a.word)))
    out.csv("conjgrowth.csv", prof.to_csv())
    payload = {"representative": G.format(prof.representative.word), "exactness": prof.exactness,
               "finite_class": prof.finite_class}
    code = EXIT_OK
    if prof.finite_class:
        payload["class"] = [G.format(u) for u in sorted(prof.elements, key=G.sort_key)]
        print(f"finite class of size {len(prof.elements)}: {{{', '.join(payload['class'])}}}")
    else:
        try:
            v = growth_classify(prof.counts)
            payload["verdict"] = v.to_dict()
            print(f"class of {cfg.element}: {v.kind} ({prof.exactness})")
        except SeriesTooShort as exc:
            payload["verdict"] = {"kind": "insufficient", "reason": str(exc)}
            code = EXIT_DATA
    out.json("conjgrowth.json", payload)
    return code


def cmd_certify(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    a = _element(G, cfg.element)
    try:
        cert = vanishing_certificate(G, a, cfg.s, cfg.L)
    except FiniteClassError as exc:
        print(f"{exc}; use tracespace", file=sys.stderr)
        return EXIT_REGIME
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = Writer(cfg, "certify")
    out.csv("certificate.csv", cert.to_csv())
    out.json("certificate.json", cert.to_dict())
    ok = cert.decreasing_tail and cert.exact
    print(f"certificate for {cert.representative}: decreasing tail {cert.decreasing_tail}, "
          f"final bound {cert.final_bound:.6g}, exact {cert.exact}")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_tracespace(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    ts = trace_space_basis(G, cfg.trace_horizon, cfg.orbit_budget)
    Writer(cfg, "tracespace").json("tracespace.json", ts.to_dict())
    print(f"trace space dimension {ts.dimension} (horizon {ts.horizon})")
    return EXIT_OK


def cmd_fccenter(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    rep = fc_report(G, cfg.trace_horizon, cfg.trace_horizon)
    Writer(cfg, "fccenter").json("fccenter.json", rep)
    print(f"N = {{{', '.join(rep['N'])}}}, quotient trace dimension {rep['quotient_trace_dimension']}")
    return EXIT_OK


def cmd_rd(cfg: RunConfig) -> int:
    G = build_backend(cfg.backend)
    est = rd_ratio_estimate(G, cfg.s, cfg.max_n, cfg.samples, seed=cfg.seed)
    out = Writer(cfg, "rd")
    out.csv("rd.csv", est.to_csv())
    radii = sorted({(n, R) for n, R, _ in est.samples})
    out.json("rd.json", {"s": est.s, "sample_count": est.sample_count, "sup_ratio": est.sup_ratio,
                         "trend_slope": est.trend_slope, "scheme": est.scheme,
                         "truncation_radius": {str(n): R for n, R in radii}})
    print(f"sup ratio {est.sup_ratio:.6g}, trend slope {est.trend_slope:.6g}")
    return EXIT_OK


COMMANDS = {"growth": cmd_growth, "conjgrowth": cmd_conjgrowth, "certify": cmd_certify,
            "tracespace": cmd_tracespace, "fccenter": cmd_fccenter, "rd": cmd_rd}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyptrace", description="growth, conjugacy and trace computations on Cayley graphs")
    p.add_argument("--version", action="version", version=f"hyptrace {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--preset", dest="backend")
        sp.add_argument("--backend", dest="backend")
        sp.add_argument("--radius", type=int)
        sp.add_argument("--element")
        sp.add_argument("--L", type=int)
        sp.add_argument("--horizon", dest="trace_horizon", type=int)
        sp.add_argument("--s", type=float)
        sp.add_argument("--max-n", dest="max_n", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--memory-budget", dest="memory_budget", type=int)
        sp.add_argument("--out")
        sp.add_argument("--cache-dir", dest="cache_dir")
        sp.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if ns.config:
        try:
            cfg = RunConfig.from_text(Path(ns.config).read_text())
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
    overrides = {f.name: getattr(ns, f.name) for f in fields(RunConfig)
                 if getattr(ns, f.name, None) is not None}
    return dataclasses.replace(cfg, **overrides).validate()


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        if ns.dump_config:
            sys.stdout.write(cfg.to_text())
            return EXIT_OK
        return COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"hyptrace: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"hyptrace: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
