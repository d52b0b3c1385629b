"""Report emission and JSON experiment configs.

A report is a list of flat records plus metadata (working precision,
validity, seed).  Reports serialize to JSON, CSV or plain text; numeric
experiment reports can additionally render a figure next to the
delimited output.

``run_config`` executes a JSON experiment file: saddle-lift batches,
randomized property suites and integrability-classifier runs, each with
declarative assertions.  Exit-code contract of the CLI front end:
0 all assertions pass, 1 an assertion fails, 2 config/usage error.
"""

import csv
import io
import json
import math
import os

from .errors import ConfigInvalid, LiftExited
from .precision import get_precision, set_precision

# ---------------------------------------------------------------------------
# Report container
# ---------------------------------------------------------------------------


class Report:
    def __init__(self, name, records=None, metadata=None):
        self.name = name
        self.records = list(records or [])
        self.metadata = {"precision": get_precision()}
        self.metadata.update(metadata or {})
        self.passed = True
        self.failures = []

    def add(self, **record):
        self.records.append(record)

    def check(self, ok, message):
        if not ok:
            self.passed = False
            self.failures.append(message)
        return ok

    def to_json(self):
        return {
            "name": self.name,
            "metadata": self.metadata,
            "records": self.records,
            "passed": self.passed,
            "failures": self.failures,
        }

    def render(self, fmt="json"):
        if fmt == "json":
            return json.dumps(self.to_json(), indent=2, default=str)
        if fmt == "csv":
            buf = io.StringIO()
            keys = sorted({k for r in self.records for k in r})
            writer = csv.DictWriter(buf, fieldnames=keys)
            writer.writeheader()
            for r in self.records:
                writer.writerow({k: r.get(k, "") for k in keys})
            return buf.getvalue()
        if fmt == "text":
            lines = ["# %s" % self.name,
                     "# metadata: %s" % json.dumps(self.metadata, default=str)]
            for r in self.records:
                lines.append("  ".join("%s=%s" % kv for kv in sorted(r.items())))
            lines.append("passed: %s" % self.passed)
            lines.extend("failure: %s" % f for f in self.failures)
            return "\n".join(lines) + "\n"
        raise ConfigInvalid("unknown format %r" % fmt)

    def write(self, directory, fmt="json", figures=False):
        """Write the delimited report, and optionally a figure, to files."""
        os.makedirs(directory, exist_ok=True)
        ext = {"json": "json", "csv": "csv", "text": "txt"}[fmt]
        path = os.path.join(directory, "%s.%s" % (self.name, ext))
        with open(path, "w") as fh:
            fh.write(self.render(fmt))
        written = [path]
        if figures:
            fig = self._render_figure(os.path.join(directory,
                                                   "%s.png" % self.name))
            if fig:
                written.append(fig)
        return written

    def _render_figure(self, path):
        """Scatter the first complex-valued column pair, if any."""
        pts = []
        for r in self.records:
            for key in ("value", "image", "residual", "drift"):
                v = r.get(key)
                if isinstance(v, (list, tuple)) and len(v) == 2:
                    pts.append((float(v[0]), float(v[1])))
                    break
                if isinstance(v, (int, float)):
                    pts.append((len(pts), float(v)))
                    break
        if not pts:
            return None
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3)
        ax.set_title(self.name)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        return path


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# Experiment kinds
# ---------------------------------------------------------------------------


def _exp_group_laws(params, rng, report):
    from .randomgen import random_series
    from .series import compose, gcomm, gconj, gmul, invert, series_close

    cases = int(params.get("cases", 50))
    validity = params.get("validity", 5)
    tol = float(params.get("tolerance", 1e-30))
    for i in range(cases):
        x = random_series(rng, validity)
        y = random_series(rng, validity)
        c0 = series_close(gcomm(x, y), gmul(invert(x), gconj(x, y)), tol)
        inv = series_close(compose(x, invert(x)).__class__.identity(
            min(x.validity, invert(x).validity)), compose(x, invert(x)), tol)
        report.add(case=i, identity_c0=bool(c0), inverse_law=bool(inv))
        report.check(c0 and inv, "group law failed on case %d" % i)


def _exp_saddle_batch(params, rng, report):
    from .randomgen import random_prepared_saddle
    from .saddlenum import Circular, Radial, lift_path

    lam = float(params.get("lam", 1.0))
    eps = float(params.get("eps", 0.02))
    count = int(params.get("count", 5))
    laps = float(params.get("laps", 1))
    rtol = float(params.get("rtol", 1e-9))
    w0_re = float(params.get("w0_re", 6.0))
    for i in range(count):
        s = random_prepared_saddle(rng, lam, eps)
        res = lift_path(s, Radial(x0=math.exp(-2.0), T=3.0),
                        w0=complex(w0_re, 0), rtol=rtol)
        report.add(case=i, kind="radial", exited=res.exited,
                   clause=res.clause, estimate_ok=res.estimate_ok,
                   length=res.length)
        report.check(res.estimate_ok,
                     "first-integral estimate failed on radial case %d" % i)
        res = lift_path(s, Circular(T=-2 * math.pi * laps, z0=2.0),
                        w0=complex(w0_re, 0), rtol=rtol)
        report.add(case=i, kind="circular", laps=laps, exited=res.exited,
                   clause=res.clause, estimate_ok=res.estimate_ok,
                   length=res.length)
        if not res.exited:
            report.check(res.estimate_ok,
                         "first-integral estimate failed on laps case %d" % i)
        if params.get("expect_exit"):
            report.check(res.exited,
                         "expected an exit clause on laps case %d" % i)


def _exp_corner(params, rng, report):
    from .saddlenum import PreparedSaddle, corner_map_numeric

    lam = float(params.get("lam", 1.0))
    s = PreparedSaddle(lam=lam, n=max(1, int(lam)), K=None, eps=0.0)
    tol = float(params.get("tolerance", 1e-6))
    zs = [complex(p[0], p[1]) for p in params.get(
        "samples", [[4, 1], [5, -2], [6, 0.5]])]
    for z, d in corner_map_numeric(s, zs, rtol=float(params.get("rtol", 1e-10))):
        resid = abs(d - lam * z)
        report.add(z=_c(z), value=_c(d), residual=resid)
        report.check(resid < tol, "corner map residual %g at %s" % (resid, z))


def _exp_classifier(params, rng, report):
    from .grammar import parse_series  # noqa: F401  (future inline specs)
    from .diffeo import DiffeoGerm, exp_field, flow_field
    from .loopclass import (LinearizableSaddle, LoopGermSpec,
                            PoincareDulacSaddle, classify_integrability)

    built_in = {
        "linear-irrational": (
            LoopGermSpec(LinearizableSaddle(math.sqrt(2)), DiffeoGerm([3])),
            "Linear"),
        "bernoulli-log2": (
            LoopGermSpec(
                LinearizableSaddle(1.0),
                DiffeoGerm([(-math.log(2)) ** m for m in range(8)], order=8)),
            "Bernoulli"),
        "poincare-dulac": (
            LoopGermSpec(PoincareDulacSaddle(1, complex(0.3, 0.1)),
                         exp_field(flow_field(1, complex(0.3, 0.1), 8))),
            "PoincareDulac"),
    }
    for name in params.get("cases", list(built_in)):
        if name not in built_in:
            raise ConfigInvalid("unknown classifier case %r" % name)
        spec, expected = built_in[name]
        verdict = classify_integrability(spec)
        report.add(case=name, verdict=verdict.klass, expected=expected)
        report.check(verdict.klass == expected,
                     "classifier returned %s for %s" % (verdict.klass, name))


_EXPERIMENTS = {
    "group-laws": _exp_group_laws,
    "saddle-batch": _exp_saddle_batch,
    "corner-map": _exp_corner,
    "classifier": _exp_classifier,
}


# ---------------------------------------------------------------------------
# Config runner
# ---------------------------------------------------------------------------

CONFIG_SCHEMA = {
    "version": "int, currently 1",
    "precision": "int decimal digits (optional, default 50)",
    "seed": "int (optional, default 0)",
    "format": "json | csv | text (optional, default json)",
    "figures": "bool (optional, default false)",
    "output_dir": "directory for report files (optional)",
    "experiments": [
        {"name": "str", "kind": "one of %s" % sorted(_EXPERIMENTS),
         "params": "kind-specific dict"}
    ],
}


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigInvalid("cannot read config: %s" % e)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("malformed JSON: %s" % e)
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    if cfg.get("version", 1) != 1:
        raise ConfigInvalid("unsupported config version %r" % cfg.get("version"))
    exps = cfg.get("experiments")
    if not isinstance(exps, list) or not exps:
        raise ConfigInvalid("config needs a nonempty 'experiments' list")
    for e in exps:
        if not isinstance(e, dict) or "kind" not in e:
            raise ConfigInvalid("each experiment needs a 'kind'")
        if e["kind"] not in _EXPERIMENTS:
            raise ConfigInvalid("unknown experiment kind %r" % e["kind"])
    return cfg


def run_config(path):
    """Execute a JSON experiment file; returns the list of reports.

    Raises ConfigInvalid for schema problems; assertion failures are
    recorded on the reports (``passed`` flags), not raised.
    """
    import random
    import zlib

    cfg = load_config(path)
    if "precision" in cfg:
        set_precision(int(cfg["precision"]))
    seed = int(cfg.get("seed", 0))
    fmt = cfg.get("format", "json")
    figures = bool(cfg.get("figures", False))
    out_dir = cfg.get("output_dir")
    reports = []
    for i, exp in enumerate(cfg["experiments"]):
        name = exp.get("name", "%s-%d" % (exp["kind"], i))
        rng = random.Random(seed ^ zlib.crc32(name.encode()))
        report = Report(name, metadata={"seed": seed, "kind": exp["kind"]})
        try:
            _EXPERIMENTS[exp["kind"]](exp.get("params", {}), rng, report)
        except LiftExited as e:
            report.add(error="LiftExited", clause=e.clause)
            report.check(False, "lift exited: %s" % e)
        if out_dir:
            report.write(out_dir, fmt, figures)
        reports.append(report)
    return reports
