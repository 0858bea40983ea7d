"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 degenerate measure.
"""
from __future__ import annotations

import argparse
import os
import secrets
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import asymptotics as asy
from . import exact, harness
from .formats import dump_json, write_csv
from .model import RestrictionSet, floor_pow, parse_model, parse_restriction
from .sampler import ConditionedPoissonSampler, SequentialSampler, run_chunks

COMMANDS = ("hn", "law", "charfn", "predict", "sample", "verify", "all")

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "hn"
    model: str = "uniform"
    restriction: str = "full"
    n: str = "10"
    seed: int | None = None
    samples: int = 10000
    out: str | None = None
    kind: str = "rational"
    threads: int | None = None
    stat: str = "T"
    M: str = "1"
    x: str = "0.5"
    s: str = "-1.5707963267948966:1.5707963267948966:13"
    check: str = "clt"
    sampler: str = "sequential"
    tilt: float | None = None
    a: float = 0.0
    centering: str = "lattice"
    criteria: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_argv(self) -> list[str]:
        argv = [self.command]
        default = RunConfig(command=self.command)
        for f in fields(self):
            if f.name == "command":
                continue
            val = getattr(self, f.name)
            if val != getattr(default, f.name) and val is not None:
                argv += [f"--{f.name.replace('_', '-')}", str(val)]
        return argv


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    t = str(_TYPES[key])
    if value in ("", "None") and "None" in t:
        return None
    try:
        if t.startswith("int"):
            return int(value)
        if t.startswith("float"):
            return float(value)
    except ValueError as exc:
        raise UsageError(f"{key}: cannot parse {value!r}") from exc
    return value


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES or key == "command":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weighted-perms", description="Weighted random permutations with restricted cycle lengths.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=argparse.SUPPRESS, help="file of key = value lines")
        for f in fields(RunConfig):
            if f.name == "command":
                continue
            sp.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=argparse.SUPPRESS)
    return p


def parse_config(argv: list[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    values = {}
    if "config" in ns:
        values.update(read_config_file(ns.pop("config")))
    for key, val in ns.items():
        if key != "command":
            values[key] = _coerce(key, val)
    values["command"] = ns["command"]
    return RunConfig.from_dict(values)


# helpers ----------------------------------------------------------------------------


def parse_ns(spec: str) -> list[int]:
    """``50``, ``0..50`` or ``100,200,400``."""
    try:
        if ".." in spec:
            lo, hi = spec.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(v) for v in spec.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad n specification {spec!r}") from exc


def parse_grid(spec: str) -> list[float]:
    """``a:b:k`` (k evenly spaced points) or a comma list."""
    try:
        if ":" in spec:
            a, b, k = spec.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(k))]
        return [float(v) for v in spec.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}") from exc


def _ints(spec: str) -> list[int]:
    return [int(v) for v in spec.replace(",", ";").split(";") if v.strip()]


class _Out:
    """Collects named artifacts; writes them under --out or echoes to stdout."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out) if cfg.out else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
            dump_json({"config": cfg.to_dict(), "version": __version__}, self.dir / "run_config.json")

    def csv(self, name: str, header, rows):
        if self.dir:
            write_csv(rows, header, self.dir / name)
        else:
            write_csv(rows, header, stream=sys.stdout)

    def json(self, name: str, obj):
        text = dump_json(obj, self.dir / name if self.dir else None)
        if not self.dir:
            print(text)


# commands ----------------------------------------------------------------------------


def _cmd_hn(cfg, model, fam, out):
    rows = []
    for n in parse_ns(cfg.n):
        A = fam.at(n) if n > 0 else RestrictionSet(0)
        if n == 0:
            rows.append((0, 1))
            continue
        rows.append((n, exact.h_n(model, A, kind=cfg.kind)))
    out.csv("hn.csv", ["n", "h_n"], rows)
    return EXIT_OK


def _cmd_law(cfg, model, fam, out):
    for n in parse_ns(cfg.n):
        A = fam.at(n)
        stat = cfg.stat
        if stat == "T":
            law = exact.total_cycles_law(model, A, kind=cfg.kind)
        elif stat == "C":
            law = exact.joint_cycle_count_law(model, A, _ints(cfg.M), kind=cfg.kind)
        elif stat == "ell1":
            law = exact.ell1_law(model, A, kind=cfg.kind)
        elif stat == "B":
            law = exact.B_law(model, A, float(cfg.x), kind=cfg.kind)
        elif stat == "cycle_type":
            law = exact.brute_force_oracle(model, A, "cycle_type")
        else:
            raise UsageError(f"unknown statistic {stat!r}")
        out.csv(f"law_{stat}_n{n}.csv", ["outcome", "probability"], zip(law.support, law.probs))
    return EXIT_OK


def _cmd_charfn(cfg, model, fam, out):
    grid = parse_grid(cfg.s)
    for n in parse_ns(cfg.n):
        A = fam.at(n)
        if cfg.stat == "T":
            vals = [exact.char_T(model, A, s) for s in grid]
        elif cfg.stat == "B":
            block = range(1, floor_pow(n, float(cfg.x)) + 1)
            vals = [exact.char_B(model, n, [(block, s)], A) for s in grid]
        else:
            raise UsageError("charfn supports --stat T or B")
        out.csv(f"charfn_{cfg.stat}_n{n}.csv", ["s", "re", "im"], [(s, v.real, v.imag) for s, v in zip(grid, vals)])
    return EXIT_OK


def _cmd_predict(cfg, model, fam, out):
    recs = []
    for n in parse_ns(cfg.n):
        A = fam.at(n)
        if cfg.stat == "h_n":
            recs.append(asy.predict_h_n(model, A).to_record())
        elif cfg.stat == "T":
            recs += [asy.predict_char_T(model, A, s).to_record() for s in parse_grid(cfg.s)]
        elif cfg.stat == "B":
            recs += [asy.predict_char_B(model, n, float(cfg.x), s, A).to_record() for s in parse_grid(cfg.s)]
        else:
            raise UsageError("predict supports --stat h_n, T or B")
    out.json("predictions.json", recs)
    return EXIT_OK


def _cmd_sample(cfg, model, fam, out):
    (n,) = parse_ns(cfg.n)[:1]
    A = fam.at(n)
    if cfg.sampler == "sequential":
        s = SequentialSampler(model, A)
        draws = run_chunks(s.sample_many, cfg.samples, cfg.seed, cfg.threads)
        vecs = [" ".join(f"{m}:{c}" for m, c in sorted(_counts(d).items())) for d in draws]
    elif cfg.sampler == "poisson":
        s = ConditionedPoissonSampler(model, A, t=cfg.tilt)
        rows = run_chunks(lambda size, g: list(s.sample_counts(size, g)), cfg.samples, cfg.seed, cfg.threads)
        vecs = [s.to_vector(r).sparse() for r in rows]
    else:
        raise UsageError(f"unknown sampler {cfg.sampler!r}")
    out.csv("samples.csv", ["draw_id", "counts"], enumerate(vecs))
    return EXIT_OK


def _counts(lengths) -> dict:
    c: dict = {}
    for m in lengths:
        c[m] = c.get(m, 0) + 1
    return c


def _cmd_verify(cfg, model, fam, out):
    ns = parse_ns(cfg.n)
    xs = [float(v) for v in cfg.x.split(",")]
    chk = cfg.check
    if chk == "poisson":
        rep = harness.verify_poisson_cycle_counts(model, fam, _ints(cfg.M), ns)
    elif chk == "clt":
        rep = harness.verify_clt_T(model, fam, ns, cfg.samples, cfg.seed, cfg.centering, cfg.threads)
    elif chk == "modpoisson":
        rep = harness.verify_mod_poisson_T(model, fam, ns, parse_grid(cfg.s))
    elif chk == "pd":
        rep = harness.verify_pd_large_cycles(model, fam, ns[-1], cfg.samples, cfg.seed,
                                             n_exact=min(ns[-1], 2000), threads=cfg.threads)
    elif chk == "flt":
        rep = harness.verify_flt(model, fam, xs, ns, cfg.samples, cfg.seed, centering=cfg.centering,
                                 threads=cfg.threads)
    elif chk == "flt_restricted":
        rep = harness.verify_flt_restricted(model, cfg.a, xs, ns, cfg.samples, cfg.seed,
                                            centering=cfg.centering, threads=cfg.threads)
    elif chk == "flt_parity":
        rep = harness.verify_flt_parity(model, xs, ns, cfg.samples, cfg.seed, threads=cfg.threads)
    elif chk == "samplers":
        rep = harness.verify_samplers(model, fam, ns[-1], cfg.samples, cfg.seed, cfg.tilt, cfg.threads)
    elif chk == "hn":
        rep = harness.verify_hn_asymptotics(model, fam, ns)
    elif chk == "charB":
        rep = harness.verify_char_B_asymptotics(model, xs[0], ns)
    else:
        raise UsageError(f"unknown check {chk!r}; choose from {sorted(harness.CHECKS)}")
    if out.dir:
        rep.to_json(out.dir / "report.json")
        rep.to_csv(out.dir / "report.csv")
    else:
        print(rep.to_json())
    print(rep.summary(), file=sys.stderr)
    return EXIT_FAIL if rep.verdict == "fail" else EXIT_OK


def _cmd_all(cfg, model, fam, out):
    from .acceptance import run_all

    numbers = _ints(cfg.criteria) or None
    results = run_all(numbers, echo=lambda line: print(line, file=sys.stderr))
    out.json("acceptance.json", [{"criterion": r.number, "title": r.title, "passed": r.passed,
                                  "elapsed": r.elapsed, "detail": r.detail} for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


_HANDLERS = {"hn": _cmd_hn, "law": _cmd_law, "charfn": _cmd_charfn, "predict": _cmd_predict,
             "sample": _cmd_sample, "verify": _cmd_verify, "all": _cmd_all}


def run(cfg: RunConfig) -> int:
    if cfg.threads is not None:
        os.environ["WEIGHTED_PERMS_THREADS"] = str(cfg.threads)
    needs_seed = cfg.command in ("sample", "verify")
    if needs_seed and cfg.seed is None:
        cfg.seed = secrets.randbits(63)
        print(f"seed: {cfg.seed}", file=sys.stderr)
    if cfg.kind not in ("rational", "float", "mpfloat"):
        raise UsageError(f"unknown kind {cfg.kind!r}")
    model = parse_model(cfg.model)
    fam = parse_restriction(cfg.restriction)
    out = _Out(cfg)
    return _HANDLERS[cfg.command](cfg, model, fam, out)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except exact.DegenerateMeasureError as exc:
        print(f"degenerate measure: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
