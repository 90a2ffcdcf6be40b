"""Command-line experiment driver.

Subcommands: ``threshold``, ``stationary``, ``density-response``,
``activity-response``, ``analytic`` and ``verify``.  Every run is fully
determined by its :class:`ExperimentSpec` (including the seed), and the
same spec writes byte-identical files.

Exit status: 0 on success, 1 for an invalid spec or a failed verification,
2 when a work budget (orbit steps, enumeration size) ran out.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from functools import partial

import numpy as np

from . import __version__
from . import analytic
from .core import BudgetExceeded, config_to_str
from .graph import MultiGraph, SinkedGraph, build_family, build_random_regular
from .montecarlo import (HIST_LABELS, BurnInPolicy, density_response, activity_response,
                         dump_json, stationary_sample, stationary_density_estimate,
                         threshold_estimate, threshold_summary_json, write_trials_csv)
from .rng import RngStream
from .verify import verify_suite

COMMANDS = ("threshold", "stationary", "density-response", "activity-response", "analytic", "verify")
EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one CLI run."""

    command: str
    family: str | None = None
    n: list = field(default_factory=list)
    q: int = 2
    trials: int = 100
    seed: int = 0
    lambdas: list = field(default_factory=list)
    out: str | None = None
    format: str = "csv"
    suite: str = "all"
    table: bool = False
    factor: int = 8
    sites: str = "all"
    max_steps: int | None = None
    dump_state: str | None = None

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else dict(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self):
        if self.command not in COMMANDS:
            raise SpecError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise SpecError("format must be csv or json")
        if self.command in ("threshold", "stationary", "density-response", "activity-response"):
            if not self.family:
                raise SpecError("--family is required")
            if not self.n:
                raise SpecError("--n is required")
            if any(int(x) < 1 for x in self.n):
                raise SpecError("sizes must be positive")
            if self.trials < 2:
                raise SpecError("need at least two trials")
        if self.command in ("density-response", "activity-response"):
            if not self.lambdas or any(not (x >= 0 and math.isfinite(x)) for x in self.lambdas):
                raise SpecError("--lambdas must be a nonempty list of nonnegative numbers")
        if not 0 <= self.seed < 2**64:
            raise SpecError("seed must be an unsigned 64-bit integer")
        return self


# --- helpers -----------------------------------------------------------------------

def _header(spec):
    return [f"sandlab {__version__}", f"spec {spec.to_json()}"]


def _emit(spec, rows, columns, summary=None):
    """Write rows as CSV (with the spec header) or a JSON document; stdout when ``out`` is unset."""
    if spec.format == "json":
        doc = {"spec": asdict(spec), "version": __version__, "rows": rows}
        if summary is not None:
            doc["summary"] = summary
        text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    else:
        buf = io.StringIO()
        for line in _header(spec):
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([r.get(c, "") for c in columns])
        text = buf.getvalue()
    if spec.out:
        try:
            with open(spec.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise SpecError(f"cannot write {spec.out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _graph(spec, n, sinked):
    try:
        if spec.family == "random-regular":
            if sinked:
                raise SpecError("random-regular graphs have no sink")
            return partial(build_random_regular, spec.q, n)
        g = build_family(spec.family, n, with_sink=sinked, q=spec.q, rng=None)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    if sinked and not isinstance(g, SinkedGraph):
        raise SpecError(f"family {spec.family!r} has no sinked version")
    if not sinked and not isinstance(g, MultiGraph):
        if spec.family == "ladder":
            return build_family("circular-ladder", n)
        raise SpecError(f"family {spec.family!r} has no sinkless version")
    return g


def _reference_threshold(family, n, q):
    if family == "bracelet":
        return analytic.bracelet_zeta_c(), "exact"
    if family == "flower":
        return analytic.flower_zeta_c(), "exact"
    if family == "cycle":
        return 1.0, "exact"
    if family == "torus":
        table = {64: 2.1249561, 128: 2.1251851, 256: 2.1252572, 512: 2.1252786}
        if n in table:
            return table[n], "reference"
        return 2.125288, "reference (infinite volume)"
    if family == "random-regular":
        return {2: 1.5, 3: 2.00041, 4: 2.51167}.get(q), "reference (tree limit)"
    if family == "ladder":
        return 1.6082, "reference"
    return None, None


def _summary_line(label, est, ref, ref_kind):
    text = f"{label}: {est.mean:.7f} +- {est.stderr:.7f} (n={est.n_trials})"
    if ref is not None:
        dev = (est.mean - ref) / est.stderr if est.stderr > 0 else float("nan")
        text += f"  {ref_kind} {ref:.7f}  deviation {dev:+.2f} stderr"
    return text


def fit_power_law(sizes, means, exponent=1.7):
    """Least-squares fit ``zeta(n) = a - b n^{-exponent}``; returns ``(a, b)``."""
    x = np.asarray(sizes, float) ** -exponent
    design = np.column_stack([np.ones_like(x), -x])
    (a, b), *_ = np.linalg.lstsq(design, np.asarray(means, float), rcond=None)
    return float(a), float(b)


# --- commands ------------------------------------------------------------------------

def _run_threshold(spec):
    rows, means = [], []
    for n in spec.n:
        g = _graph(spec, int(n), sinked=False)
        summary = threshold_estimate(g, spec.trials, spec.seed)
        ref, kind = _reference_threshold(spec.family, int(n), spec.q)
        print(_summary_line(f"threshold {spec.family} n={n}", summary.estimate, ref, kind), file=sys.stderr)
        means.append(summary.estimate.mean)
        if spec.format == "csv" and len(spec.n) == 1:
            if spec.out:
                write_trials_csv(spec.out, spec.family, n, spec.seed, summary.trials, _header(spec))
            else:
                buf = io.StringIO()
                for line in _header(spec):
                    buf.write(f"# {line}\n")
                w = csv.writer(buf, lineterminator="\n")
                w.writerow(["graph_family", "size", "seed", "stream_id", "m", "density", *HIST_LABELS, "topples"])
                for t in summary.trials:
                    w.writerow([spec.family, n, spec.seed, t.stream_id, t.m, repr(t.m / t.n_sites),
                                *map(int, t.height_histogram), t.total_topples])
                sys.stdout.write(buf.getvalue())
            return EXIT_OK
        rows.append(threshold_summary_json(spec.family, int(n), summary))
    extra = None
    if len(spec.n) >= 2:
        a, b = fit_power_law([int(x) for x in spec.n], means)
        extra = {"fit": "zeta(n) = a - b n^-1.7", "a": a, "b": b}
        print(f"fit zeta(n) = {a:.7f} - ({b:.4f}) n^-1.7", file=sys.stderr)
    cols = ["family", "size", "n_trials", "zeta_c_hat", "stderr", "mean_topples"]
    _emit(spec, rows, cols, extra)
    return EXIT_OK


def _run_stationary(spec):
    rows = []
    policy = BurnInPolicy(factor=spec.factor)
    for n in spec.n:
        g = _graph(spec, int(n), sinked=True)
        sites = np.array([0]) if spec.sites == "root" else None
        if spec.dump_state:
            with open(spec.dump_state, "w") as fh:
                for i in range(spec.trials):
                    fh.write(config_to_str(stationary_sample(g, RngStream(spec.seed, i), policy)) + "\n")
        est = stationary_density_estimate(g, spec.trials, spec.seed, policy, sites=sites)
        ref = analytic.cayley_zeta_s(spec.q) if spec.family == "wired-tree" and spec.sites == "root" else None
        label = f"stationary {spec.family} n={n}"
        target = est.site_mean if sites is not None else est.per_nonsink
        print(_summary_line(label, target, None if ref is None else float(ref), "exact"), file=sys.stderr)
        rows.append({
            "family": spec.family, "size": int(n), "n_samples": spec.trials,
            "zeta_s_nonsink": est.per_nonsink.mean, "stderr_nonsink": est.per_nonsink.stderr,
            "zeta_s_all": est.per_vertex.mean, "stderr_all": est.per_vertex.stderr,
            "site_mean": est.site_mean.mean, "site_stderr": est.site_mean.stderr,
            **{f"p{k}": float(p) for k, p in enumerate(est.marginals)},
        })
    cols = list(rows[0])
    _emit(spec, rows, cols)
    return EXIT_OK


_RHO = {"bracelet": analytic.bracelet_rho, "flower": analytic.flower_rho, "cycle": analytic.cycle_rho}


def _run_density_response(spec):
    rows = []
    for n in spec.n:
        _graph(spec, int(n), sinked=True)
        curve = density_response(spec.family, int(n), spec.lambdas, spec.trials, spec.seed, q=spec.q,
                                 analytic=_RHO.get(spec.family))
        for r in curve:
            r = {k: v for k, v in r.items() if k != "values"}
            r["size"] = int(n)
            rows.append(r)
            msg = f"lambda={r['lambda']:g} rho={r['rho']:.6f} +- {r['stderr']:.6f}"
            if "analytic" in r:
                msg += f"  analytic {r['analytic']:.6f}"
            print(msg, file=sys.stderr)
    _emit(spec, rows, ["size", "lambda", "rho", "stderr", "trials", "analytic"])
    return EXIT_OK


def _run_activity_response(spec):
    rows = []
    exhausted = 0
    for n in spec.n:
        _graph(spec, int(n), sinked=False)
        curve = activity_response(spec.family, int(n), spec.lambdas, spec.trials, spec.seed,
                                  q=spec.q, max_steps=spec.max_steps)
        for r in curve:
            exhausted += r["budget_exhausted"]
            periods = [p for p in r["periods"] if p is not None]
            row = {"size": int(n), "lambda": r["lambda"], "trials": spec.trials,
                   "budget_exhausted": r["budget_exhausted"], "max_period": max(periods, default=""),
                   "mean_activity": float(np.mean([float(a) for a in r["activities"] if a is not None]))
                   if periods else ""}
            for a, k in sorted(((a, k) for a, k in r["histogram"].items() if a is not None)):
                row[f"activity={a}"] = k
            rows.append(row)
            print(f"lambda={r['lambda']:g} " + " ".join(f"{k}:{v}" for k, v in row.items()
                                                        if k.startswith("activity=")), file=sys.stderr)
    cols = ["size", "lambda", "trials", "budget_exhausted", "max_period", "mean_activity"]
    cols += sorted({k for r in rows for k in r if k.startswith("activity=")},
                   key=lambda s: Fraction(s.split("=")[1]))
    _emit(spec, rows, cols)
    return EXIT_BUDGET if exhausted else EXIT_OK


def _run_analytic(spec):
    if spec.table or not spec.family:
        rows = [dict(zip(("graph", "zeta_s", "zeta_s_exact", "zeta_c", "zeta_c_exact"), r))
                for r in analytic.summary_table()]
        _emit(spec, rows, ["graph", "zeta_s", "zeta_s_exact", "zeta_c", "zeta_c_exact"])
        return EXIT_OK
    try:
        law = analytic.density_law(spec.family, q=spec.q)
    except KeyError as exc:
        raise SpecError(str(exc)) from exc
    row = {"family": law.family, "zeta_s": law.zeta_s, "zeta_c": law.zeta_c,
           "zeta_s_exact": law.zeta_s_exact, "zeta_c_exact": law.zeta_c_exact}
    if law.zeta_c_prime is not None:
        row["zeta_c_prime"] = law.zeta_c_prime
    print(" ".join(f"{k}={v:.7g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    if spec.out:
        _emit(spec, [row], list(row))
    return EXIT_OK


def _run_verify(spec):
    try:
        records = verify_suite(spec.suite, spec.seed)
    except KeyError as exc:
        raise SpecError(str(exc)) from exc
    for r in records:
        print(json.dumps(r, sort_keys=True))
    if spec.out:
        _emit(spec, records, ["suite", "check", "passed", "detail"])
    return EXIT_OK if all(r["passed"] for r in records) else EXIT_INVALID


RUNNERS = {
    "threshold": _run_threshold,
    "stationary": _run_stationary,
    "density-response": _run_density_response,
    "activity-response": _run_activity_response,
    "analytic": _run_analytic,
    "verify": _run_verify,
}


def run(spec):
    """Execute a spec and return the exit status."""
    try:
        spec.validate()
        return RUNNERS[spec.command](spec)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET


# --- argument parsing ----------------------------------------------------------------

def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text):
    return [int(x) for x in text.replace(",", " ").split()]


def build_parser():
    p = argparse.ArgumentParser(prog="sandlab", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"sandlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sized=True):
        sp.add_argument("--config", help="JSON file with spec fields; explicit flags override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"])
        if sized:
            sp.add_argument("--family")
            sp.add_argument("--n", type=_ints, help="size parameter(s), comma separated")
            sp.add_argument("--q", type=int, help="branching number for tree-like families")
            sp.add_argument("--trials", type=int)

    sp = sub.add_parser("threshold", help="threshold density by sequential addition")
    common(sp)
    sp = sub.add_parser("stationary", help="stationary density of the driven chain")
    common(sp)
    sp.add_argument("--factor", type=int, help="burn-in additions per non-sink after recurrence")
    sp.add_argument("--sites", choices=["all", "root"])
    sp.add_argument("--dump-state", dest="dump_state", help="write each sample as one line")
    for name in ("density-response", "activity-response"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--lambdas", type=_floats, required=False)
        if name == "activity-response":
            sp.add_argument("--max-steps", dest="max_steps", type=int)
    sp = sub.add_parser("analytic", help="closed-form densities")
    sp.add_argument("what", nargs="?", choices=["table"], help="print the summary table")
    common(sp, sized=False)
    sp.add_argument("--family")
    sp.add_argument("--q", type=int)
    sp = sub.add_parser("verify", help="run self-check suites")
    common(sp, sized=False)
    sp.add_argument("--suite")
    return p


def spec_from_args(argv=None):
    args = build_parser().parse_args(argv)
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config: {exc}") from exc
    data["command"] = args.command
    for key, value in vars(args).items():
        if key in ("config", "command", "what") or value is None:
            continue
        data[key] = value
    if getattr(args, "what", None) == "table":
        data["table"] = True
    return ExperimentSpec.from_json(data)


def main(argv=None):
    try:
        spec = spec_from_args(argv)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
