"""Command-line front end: ``spiked-spectra {dist,sample,gap,verify,mp,phase}``.

Tables go to --out (stdout by default) as CSV with a header row or as JSON.
Floats are written with 17 significant digits so they read back exactly.
Exit codes: 0 success, 1 numerical failure (or failed checks), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import distributions as dist
from . import ensembles as ens
from . import finite_kernels as fk
from . import verify as vf

COMMANDS = ("dist", "sample", "gap", "verify", "mp", "phase")
FORMATS = ("csv", "json")
MAX_DET_N = 12

# tag -> (admissible backends, default backend)
DIST_BACKENDS = {
    "f_gue": (("painleve", "fredholm"), "painleve"),
    "f_goe": (("painleve",), "painleve"),
    "f_gse": (("painleve", "fredholm"), "painleve"),
    "f_gse1": (("fredholm",), "fredholm"),
    "f_gue_t": (("fredholm",), "fredholm"),
    "g_t": (("finite_rank",), "finite_rank"),
    "normal": (("exact",), "exact"),
}


class UsageError(ValueError):
    """Bad flag values; reported with exit code 2."""


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    step: float

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must look like lo:hi:step, got {text!r}")
        try:
            lo, hi, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"grid must look like lo:hi:step, got {text!r}") from None
        if not step > 0:
            raise UsageError("grid step must be positive")
        if hi < lo:
            raise UsageError("grid upper end is below the lower end")
        return cls(lo, hi, step)

    def values(self) -> np.ndarray:
        n = int(round((self.hi - self.lo) / self.step)) + 1
        return self.lo + self.step * np.arange(n)


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(rows: Sequence[dict], columns: Sequence[str], fmt: str, meta: dict | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        return buf.getvalue()
    body = {k: _jsonable(v) for k, v in (meta or {}).items()}
    body["rows"] = [{c: _jsonable(r.get(c)) for c in columns} for r in rows]
    return json.dumps(body, indent=2, ensure_ascii=False) + "\n"


def emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# limit-law routing
# ---------------------------------------------------------------------------

def limit_law(beta: int, regime: ens.ScalingRegime) -> tuple[str | None, int | None]:
    """Distribution name (as in distributions.get) and its t parameter, or None if unknown."""
    k = regime.multiplicity
    tag = regime.tag
    if beta == 1:
        return ("goe", None) if tag is ens.Regime.SUBCRITICAL else (None, None)
    if beta == 2:
        if tag is ens.Regime.SUBCRITICAL:
            return "gue", None
        if tag is ens.Regime.CRITICAL:
            return "gue_t", k
        return ("normal", None) if k == 1 else ("g_t", k)
    if tag is ens.Regime.SUBCRITICAL:
        return "gse", None
    if k != 1:
        return None, None
    return ("gse1", None) if tag is ens.Regime.CRITICAL else ("normal", None)


def _law_label(name: str | None, t: int | None) -> str | None:
    if name is None:
        return None
    return f"{name}({t})" if t is not None else name


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _dist_tag(name: str) -> str:
    tag = name.lower()
    if not tag.startswith("f_") and tag not in ("g_t", "normal"):
        tag = "f_" + tag
    if tag not in DIST_BACKENDS:
        raise UsageError(f"unknown distribution {name!r}; choose from {', '.join(DIST_BACKENDS)}")
    return tag


def cmd_dist(args) -> int:
    tag = _dist_tag(args.dist)
    allowed, default = DIST_BACKENDS[tag]
    backend = args.backend or default
    if backend not in allowed:
        raise UsageError(f"backend {backend!r} is not available for {tag}; use {', '.join(allowed)}")
    if tag in ("f_gue_t", "g_t") and (args.t is None or args.t < 1):
        raise UsageError(f"{tag} needs --t >= 1")
    order = args.quad_order
    T = Grid.parse(args.grid).values()
    if tag == "f_gue":
        fn = lambda s: dist.f_gue(s, backend, order=order)
    elif tag == "f_gse":
        fn = lambda s: dist.f_gse(s, backend, order=order)
    elif tag == "f_goe":
        fn = dist.f_goe
    elif tag == "f_gse1":
        fn = lambda s: dist.f_gse1(s, order=order)
    elif tag == "f_gue_t":
        fn = lambda s: dist.f_gue_t(s, args.t, order=order)
    elif tag == "g_t":
        fn = lambda s: dist.g_t(s, args.t, order=order)
    else:
        fn = dist.gaussian_cdf
    rows = [{"T": float(s), "value": float(fn(float(s)))} for s in T]
    meta = {"dist": tag, "backend": backend, "t": args.t}
    emit(render(rows, ["T", "value"], args.format, meta), args.out)
    return 0


def _params(args) -> ens.ModelParams:
    if args.gamma_sq < 1:
        raise UsageError("gamma^2 must be at least 1")
    if args.m < 1:
        raise UsageError("M must be positive")
    if getattr(args, "n", None):
        return ens.ModelParams(ens.DivisionAlgebra.from_beta(args.beta), args.n, args.m)
    return ens.ModelParams.from_ratio(args.beta, args.m, args.gamma_sq)


def _spikes(text: str) -> ens.SpikeSpec:
    try:
        return ens.SpikeSpec.parse(text)
    except ValueError as exc:
        raise UsageError(f"malformed spike list {text!r}: {exc}") from None


def _regime(spec: ens.SpikeSpec, params: ens.ModelParams) -> ens.ScalingRegime:
    try:
        return ens.classify_regime(spec.a_max, params, spec.top_multiplicity or 1)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sample(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    params = _params(args)
    spec = _spikes(args.spikes)
    if spec.rank > params.N:
        raise UsageError(f"spike rank {spec.rank} exceeds N = {params.N}")
    regime = _regime(spec, params)
    maxima = ens.sample_max_eigenvalues(spec, params, args.samples, args.seed, threads=args.threads)
    xi = np.sort(ens.rescale_max(maxima, regime))
    name, t = limit_law(params.beta, regime)
    ks = None
    if name is not None:
        ks = ens.ks_statistic(xi, dist.tabulated_cdf(name, t))
    n = len(xi)
    rows = [{"xi": float(x), "ecdf": (i + 1) / n} for i, x in enumerate(xi)]
    summary = {
        "beta": params.beta,
        "gamma_sq": params.gamma_sq,
        "m": params.M,
        "n": params.N,
        "spikes": str(spec),
        "regime": regime.tag.value,
        "center": regime.center,
        "scale": regime.scale,
        "limit_law": _law_label(name, t),
        "ks": ks,
        "samples": n,
        "seed": args.seed,
    }
    emit(render(rows, ["xi", "ecdf"], args.format, summary), args.out)
    text = json.dumps({k: _jsonable(v) for k, v in summary.items()}, indent=2) + "\n"
    if args.summary:
        emit(text, args.summary)
    else:
        sys.stderr.write(text)
    return 0


def cmd_gap(args) -> int:
    params = _params(args)
    if params.beta not in (2, 4):
        raise UsageError("finite-N gap probabilities exist for beta 2 and 4")
    if params.N > MAX_DET_N:
        raise UsageError(f"N = {params.N} exceeds the determinant limit N <= {MAX_DET_N}")
    spec = _spikes(args.spikes)
    if params.beta == 4:
        if spec.rank > 1:
            raise UsageError("the quaternion finite-N system supports rank <= 1")
        system = fk.QuaternionSkewSystem(params, spec.a_max)
    else:
        if spec.rank > params.N:
            raise UsageError(f"spike rank {spec.rank} exceeds N = {params.N}")
        system = fk.ComplexSpikedSystem(params, spec)
    T = Grid.parse(args.grid).values()
    if np.any(T <= 0):
        raise UsageError("gap grid must be positive")
    maxima = None
    if args.samples > 0:
        maxima = ens.sample_max_eigenvalues(spec, params, args.samples, args.seed, threads=args.threads)
    rows = []
    for t in T:
        row = {"T": float(t), "det_value": system.gap_probability(float(t)),
               "mc_value": math.nan, "mc_se": math.nan}
        if maxima is not None:
            p = float(np.mean(maxima <= t))
            row["mc_value"] = p
            row["mc_se"] = math.sqrt(max(p * (1 - p), 0.0) / len(maxima))
        rows.append(row)
    meta = {"beta": params.beta, "m": params.M, "n": params.N, "spikes": str(spec),
            "samples": args.samples, "seed": args.seed}
    emit(render(rows, ["T", "det_value", "mc_value", "mc_se"], args.format, meta), args.out)
    return 0


def _parse_tolerances(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"tolerance override must be NAME=VALUE, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"tolerance for {name} is not a number: {value!r}") from None
    return out


def cmd_verify(args) -> int:
    only = [m for item in args.only or () for m in item.split(",") if m]
    try:
        results = vf.run_suite(only, _parse_tolerances(args.tolerance))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok = all(r.passed for r in results)
    cols = ["name", "module", "deviation", "tolerance", "passed", "error"]
    rows = [r.to_dict() for r in results]
    if args.format == "json":
        body = {"passed": ok, "checks": [{k: _jsonable(v) for k, v in r.items() if k != "seconds"}
                                         for r in rows]}
        emit(json.dumps(body, indent=2) + "\n", args.out)
    else:
        emit(render(rows, cols, "csv"), args.out)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        sys.stderr.write(f"{mark} {r.module}.{r.name}: deviation {r.deviation:.3e} "
                         f"(tolerance {r.tolerance:.3g})\n")
    return 0 if ok else 1


def _gamma(args) -> float:
    if args.gamma is not None:
        g = args.gamma
    else:
        if args.gamma_sq < 0:
            raise UsageError("gamma^2 must be nonnegative")
        g = math.sqrt(args.gamma_sq)
    if g < 1:
        raise UsageError("gamma must be at least 1")
    return g


def cmd_mp(args) -> int:
    g = _gamma(args)
    b1, b2 = ens.mp_support(g)
    grid = Grid.parse(args.grid) if args.grid else Grid(0.0, math.ceil(b2 * 10) / 10 + 0.5, 0.01)
    x = grid.values()
    dens = ens.mp_density(x, g)
    rows = [{"x": float(v), "density": float(d), "cdf": ens.mp_cdf(float(v), g)}
            for v, d in zip(x, np.atleast_1d(dens))]
    meta = {"gamma": g, "lower_edge": b1, "upper_edge": b2}
    emit(render(rows, ["x", "density", "cdf"], args.format, meta), args.out)
    return 0


def _candidate_laws(beta: int, k: int) -> list[tuple[str, str, int | None]]:
    if beta == 2:
        laws = [("ks_gue", "gue", None), (f"ks_gue_{k}", "gue_t", k)]
        laws.append(("ks_normal", "normal", None) if k == 1 else (f"ks_g_{k}", "g_t", k))
        return laws
    if beta == 4:
        return [("ks_gse", "gse", None), ("ks_gse1", "gse1", None), ("ks_normal", "normal", None)]
    return [("ks_goe", "goe", None)]


def cmd_phase(args) -> int:
    params = _params(args)
    if args.multiplicity < 1 or args.multiplicity > params.N:
        raise UsageError("multiplicity must lie in [1, N]")
    avals = Grid.parse(args.grid).values()
    if np.any(avals <= -1):
        raise UsageError("spike values must exceed -1")
    laws = _candidate_laws(params.beta, args.multiplicity) if args.mc else []
    cdfs = {col: dist.tabulated_cdf(name, t) for col, name, t in laws}
    cols = ["a", "regime", "center", "scale", "limit_law"] + [c for c, _, _ in laws]
    rows = []
    for a in avals:
        a = float(a)
        spec = ens.SpikeSpec((a,), (args.multiplicity,))
        try:
            regime = ens.classify_regime(a, params, args.multiplicity)
        except ValueError:
            rows.append({"a": a, "regime": "unavailable"})
            continue
        name, t = limit_law(params.beta, regime)
        row = {"a": a, "regime": regime.tag.value, "center": regime.center, "scale": regime.scale,
               "limit_law": _law_label(name, t)}
        if laws:
            maxima = ens.sample_max_eigenvalues(spec, params, args.samples, args.seed,
                                                threads=args.threads)
            xi = ens.rescale_max(maxima, regime)
            for col, _, _ in laws:
                row[col] = ens.ks_statistic(xi, cdfs[col])
        rows.append(row)
    meta = {"beta": params.beta, "gamma_sq": params.gamma_sq, "m": params.M, "n": params.N,
            "multiplicity": args.multiplicity}
    emit(render(rows, cols, args.format, meta), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=FORMATS, default="csv")


def _model(p: argparse.ArgumentParser, beta_choices=(1, 2, 4)) -> None:
    p.add_argument("--beta", type=int, choices=beta_choices, default=2)
    p.add_argument("--gamma-sq", type=float, default=4.0, help="M/N ratio")
    p.add_argument("--m", type=int, default=400, help="number of samples M")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: SPIKED_SPECTRA_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spiked-spectra",
        description="Largest-eigenvalue laws of spiked Wishart ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="tabulate a limiting distribution")
    p.add_argument("--dist", required=True, help="f_gue, f_goe, f_gse, f_gse1, f_gue_t, g_t, normal")
    p.add_argument("--backend", default=None, help="painleve, fredholm or finite_rank")
    p.add_argument("--t", type=int, default=None, help="spike multiplicity for f_gue_t and g_t")
    p.add_argument("--grid", default="-5:2:0.1", help="lo:hi:step")
    p.add_argument("--quad-order", type=int, default=60, help="Gauss-Legendre nodes")
    _common(p)
    p.set_defaults(subparser=p, func=cmd_dist)

    p = sub.add_parser("sample", help="Monte Carlo largest eigenvalues with a KS summary")
    _model(p)
    p.add_argument("--spikes", default="", help="a:mult,a:mult (bare a means mult 1)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--summary", default=None, help="summary JSON path (default: stderr)")
    _common(p)
    p.set_defaults(subparser=p, func=cmd_sample)

    p = sub.add_parser("gap", help="finite-N gap probability with Monte Carlo comparison")
    _model(p, (2, 4))
    p.set_defaults(m=3)
    p.add_argument("--n", type=int, default=None, help="N (default: round(M / gamma^2))")
    p.add_argument("--spikes", default="")
    p.add_argument("--grid", default="0.5:4:0.5", help="T values lo:hi:step")
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo draws (0 skips)")
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(subparser=p, func=cmd_gap)

    p = sub.add_parser("verify", help="run the identity suite")
    p.add_argument("--only", action="append", help="module or check name (repeatable)")
    p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                   help="override a check tolerance (repeatable)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=FORMATS, default="json")
    p.set_defaults(subparser=p, func=cmd_verify)

    p = sub.add_parser("mp", help="Marcenko-Pastur density and distribution function")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gamma-sq", type=float, default=4.0)
    p.add_argument("--grid", default=None, help="lo:hi:step (default covers the support)")
    _common(p)
    p.set_defaults(subparser=p, func=cmd_mp)

    p = sub.add_parser("phase", help="scan the spike value across the transition")
    _model(p)
    p.add_argument("--grid", default="0:1.5:0.25", help="spike values lo:hi:step")
    p.add_argument("--multiplicity", type=int, default=1)
    p.add_argument("--mc", action="store_true", help="attach Monte Carlo KS columns")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    _common(p)
    p.set_defaults(subparser=p, func=cmd_phase)
    return parser


def _attach_values(argv: Sequence[str]) -> list[str]:
    """Join "--grid -5:2:0.1" into "--grid=-5:2:0.1" so argparse keeps the leading minus."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in ("--grid", "--spikes"):
            val = next(it, None)
            if val is not None and val.startswith("-") and not val.startswith("--"):
                out.append(f"{tok}={val}")
                continue
            out.append(tok)
            if val is not None:
                out.append(val)
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_values(sys.argv[1:] if argv is None else list(argv)))
    parser = getattr(args, "subparser", parser)
    if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 0:
        parser.error("--samples must be nonnegative")
    try:
        return args.func(args)
    except ValueError as exc:
        # UsageError and domain errors raised on argument values alike
        parser.error(str(exc))
    except ArithmeticError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 1
    except RuntimeError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
