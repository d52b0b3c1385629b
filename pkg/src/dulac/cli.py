"""Command-line front end.

Inputs are inline expressions (series in the text grammar, everything
else JSON) or ``@path`` file references.  Every result is emitted as a
self-describing report carrying the working precision and validity.

Exit codes: 0 success, 1 assertion/verification failure, 2 usage or
config error.
"""

import json
import math
import os
import sys

import click
import gmpy2

from . import report as report_mod
from .errors import ConfigInvalid, DulacError, ParseError
from .grammar import parse_series, print_series
from .precision import INF, get_precision, set_precision
from .series import (classify, compose, invert, is_unramified, series_from_json,
                     series_to_json, variation)

USAGE_EXIT = 2
FAILURE_EXIT = 1


def _load_text(arg):
    if arg.startswith("@"):
        with open(arg[1:]) as fh:
            return fh.read().strip()
    return arg


def _load_json(arg, what):
    text = _load_text(arg)
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("invalid %s JSON: %s" % (what, e))


def _series(ctx, arg):
    text = _load_text(arg)
    if text.lstrip().startswith("{"):
        return series_from_json(json.loads(text))
    f = parse_series(text, validity=ctx.obj["validity"])
    if f.validity == INF and f.terms:
        # default the truncation exponent to the largest written exponent
        return parse_series(text, validity=float(f.terms[-1][0]))
    return f


def _germ(arg):
    from .diffeo import DiffeoGerm, germ_from_json

    text = _load_text(arg)
    obj = json.loads(text) if text.lstrip().startswith("{") else None
    if obj is not None:
        return germ_from_json(obj)
    # bare comma-separated coefficients c1,c2,...
    try:
        coeffs = [complex(c) for c in text.split(",")]
    except ValueError as e:
        raise ConfigInvalid("invalid germ literal: %s" % e)
    return DiffeoGerm(coeffs)


def _derivation(arg):
    from .derivations import derivation_from_json

    return derivation_from_json(_load_json(arg, "derivation"))


def _saddle(arg):
    from .saddlenum import PreparedSaddle

    obj = _load_json(arg, "saddle")
    K = {}
    for key, val in (obj.get("K") or {}).items():
        i, j = key.split(",")
        K[(int(i), int(j))] = complex(val[0], val[1])
    return PreparedSaddle(lam=obj["lam"], n=obj.get("n", max(1, math.ceil(obj["lam"]))),
                          K=K, eps=obj.get("eps", 0.0),
                          A=obj.get("A", 1.0), B=obj.get("B", 1.0))


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _series_record(f):
    return {"text": print_series(f), "json": series_to_json(f),
            "validity": None if f.validity == INF else float(f.validity)}


def _emit(ctx, name, records, metadata=None):
    rep = report_mod.Report(name, records, metadata)
    rep.metadata.setdefault("seed", ctx.obj["seed"])
    click.echo(rep.render(ctx.obj["format"]).rstrip())


@click.group()
@click.option("--precision", type=int, envvar="DULAC_PRECISION", default=50,
              show_default=True, help="working precision in decimal digits")
@click.option("--validity", type=float, default=None,
              help="truncation exponent for parsed series (default: unbounded)")
@click.option("--degree", type=int, default=None,
              help="truncation degree for one-variable germ operations")
@click.option("--seed", type=int, default=0, show_default=True,
              help="seed for randomized suites")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="worker pool size for batch experiments")
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "text"]),
              default="json", show_default=True)
@click.pass_context
def main(ctx, precision, validity, degree, seed, jobs, fmt):
    """Dulac-series arithmetic, saddle numerics and loop classification."""
    set_precision(precision)
    ctx.obj = {
        "validity": INF if validity is None else validity,
        "degree": degree,
        "seed": seed,
        "jobs": jobs,
        "format": fmt,
    }


@main.command("compose")
@click.argument("f")
@click.argument("g")
@click.pass_context
def cmd_compose(ctx, f, g):
    """f∘g of two series (g applied first)."""
    _emit(ctx, "compose", [_series_record(compose(_series(ctx, f),
                                                  _series(ctx, g)))])


@main.command("invert")
@click.argument("f")
@click.pass_context
def cmd_invert(ctx, f):
    """Compositional inverse of a series."""
    _emit(ctx, "invert", [_series_record(invert(_series(ctx, f)))])


@main.command("var")
@click.argument("f")
@click.pass_context
def cmd_var(ctx, f):
    """Variation [τ, f]; identity exactly for unramified series."""
    s = _series(ctx, f)
    rec = _series_record(variation(s))
    rec["unramified"] = bool(is_unramified(s))
    _emit(ctx, "var", [rec])


@main.command("classify")
@click.argument("f")
@click.pass_context
def cmd_classify(ctx, f):
    """Dynamical type of the affine part."""
    cls = classify(_series(ctx, f))
    _emit(ctx, "classify", [{"kind": cls.kind.value,
                             "boundary_warning": cls.boundary_warning}])


@main.command("normal-form")
@click.argument("f")
@click.pass_context
def cmd_normal_form(ctx, f):
    """Normal form of the generator of a tangent-to-identity series."""
    from .derivations import (derivation_to_json, is_unramified_derivation,
                              log_series, normal_form_mildly_ramified,
                              normal_form_unramified)

    X = log_series(_series(ctx, f))
    if is_unramified_derivation(X):
        g, k, mu, rem = normal_form_unramified(X)
        rec = {"shape": "unramified", "k": k, "mu": _c(mu),
               "conjugator": _series_record(g),
               "remainder": derivation_to_json(rem)}
    else:
        g, k, a, b, mu = normal_form_mildly_ramified(X)
        rec = {"shape": "mildly-ramified", "k": k, "a": _c(a), "b": _c(b),
               "mu": _c(mu), "conjugator": _series_record(g)}
    _emit(ctx, "normal-form", [rec])


@main.command("lvar")
@click.argument("x")
@click.pass_context
def cmd_lvar(ctx, x):
    """Logarithmic variation of a nilpotent derivation (JSON input)."""
    from .derivations import derivation_to_json, lvar

    _emit(ctx, "lvar", [derivation_to_json(lvar(_derivation(x)))])


@main.command("lvar-inv")
@click.argument("z")
@click.pass_context
def cmd_lvar_inv(ctx, z):
    """Section of lvar: a derivation whose logarithmic variation is Z."""
    from .derivations import derivation_to_json, lvar_inverse

    _emit(ctx, "lvar-inv", [derivation_to_json(lvar_inverse(_derivation(z)))])


@main.command("exp")
@click.argument("x")
@click.pass_context
def cmd_exp(ctx, x):
    """Exponential of a nilpotent derivation: a tangent-to-identity series."""
    from .derivations import exp_derivation

    _emit(ctx, "exp", [_series_record(exp_derivation(_derivation(x)))])


@main.command("log")
@click.argument("f")
@click.pass_context
def cmd_log(ctx, f):
    """Infinitesimal generator of a tangent-to-identity series."""
    from .derivations import derivation_to_json, log_series

    _emit(ctx, "log", [derivation_to_json(log_series(_series(ctx, f)))])


@main.command("project")
@click.argument("f")
@click.pass_context
def cmd_project(ctx, f):
    """Push an unramified series down to a one-variable germ."""
    from .diffeo import germ_to_json, project_pi

    g = project_pi(_series(ctx, f), order=ctx.obj["degree"])
    _emit(ctx, "project", [germ_to_json(g)])


@main.command("lift")
@click.argument("g")
@click.option("--branch", type=int, default=0, show_default=True)
@click.pass_context
def cmd_lift(ctx, g, branch):
    """Lift a one-variable germ through x = e^(-z)."""
    from .diffeo import lift_pi

    _emit(ctx, "lift", [_series_record(lift_pi(_germ(g), branch=branch))])


@main.command("conjugate-model")
@click.argument("f")
@click.pass_context
def cmd_conjugate_model(ctx, f):
    """Conjugate a non-indifferent series to its affine model."""
    from .rigidity import conjugate_to_model

    phi, model = conjugate_to_model(_series(ctx, f))
    _emit(ctx, "conjugate-model", [{
        "model_kind": model.kind.value,
        "model_parameter": _c(model.parameter),
        "conjugator": _series_record(phi),
    }])


@main.command("gh")
@click.argument("g")
@click.argument("h")
@click.pass_context
def cmd_gh(ctx, g, h):
    """Commuting-pair dichotomy for two tangent-to-identity germs."""
    from .diffeo import gh_dichotomy

    v = gh_dichotomy(_germ(g), _germ(h))
    _emit(ctx, "gh", [{"kind": v.kind.value, "k": v.k,
                       "nu": None if v.nu is None else _c(v.nu),
                       "leading": None if v.leading is None else _c(v.leading),
                       "degree": v.degree, "formal_only": v.formal_only}])


def _path_from_json(obj):
    from .saddlenum import Circular, Exponential, Polyline, Radial

    kind = obj.get("kind")
    if kind == "radial":
        return Radial(x0=obj["x0"], T=obj["T"])
    if kind == "circular":
        return Circular(T=obj["T"], z0=complex(*obj.get("z0", [0, 0])))
    if kind == "exponential":
        return Exponential(alpha=obj["alpha"], C=obj["C"], T=obj["T"])
    if kind == "polyline":
        return Polyline([complex(*p) for p in obj["points"]])
    raise ConfigInvalid("unknown path kind %r" % kind)


@main.command("lift-path")
@click.argument("saddle")
@click.argument("path")
@click.option("--w0", default="6,0", show_default=True,
              help="initial w as 're,im'")
@click.option("--rtol", type=float, default=1e-10, show_default=True)
@click.pass_context
def cmd_lift_path(ctx, saddle, path, w0, rtol):
    """Lift a base path through a prepared saddle; reports exit clauses."""
    from .saddlenum import lift_path

    s = _saddle(saddle)
    p = _path_from_json(_load_json(path, "path"))
    re_w, im_w = (float(t) for t in w0.split(","))
    res = lift_path(s, p, complex(re_w, im_w), rtol=rtol)
    _emit(ctx, "lift-path", [{
        "exited": res.exited, "clause": res.clause,
        "length": res.length, "estimate_ok": res.estimate_ok,
        "disagreements": len(res.disagreements),
        "final_z": None if res.final_z is None else _c(res.final_z),
        "final_phi": None if res.final_phi is None else _c(res.final_phi),
    }], metadata={"lam": s.lam, "eps": s.eps})


@main.command("corner")
@click.argument("saddle")
@click.option("--samples", default="4,1;5,-2;6,0.5", show_default=True,
              help="semicolon-separated z points 're,im'")
@click.option("--rtol", type=float, default=1e-10, show_default=True)
@click.pass_context
def cmd_corner(ctx, saddle, samples, rtol):
    """Canonical corner-transition determination at sample points."""
    from .saddlenum import corner_map_numeric

    s = _saddle(saddle)
    zs = [complex(*(float(t) for t in p.split(","))) for p in samples.split(";")]
    recs = [{"z": _c(z), "value": _c(d)}
            for z, d in corner_map_numeric(s, zs, rtol=rtol)]
    _emit(ctx, "corner", recs, metadata={"lam": s.lam, "eps": s.eps})


@main.command("holonomy")
@click.argument("saddle")
@click.option("--which", type=click.Choice(["Omega", "Sigma"]), default="Omega",
              show_default=True)
@click.option("--start", default="0.05,0", show_default=True)
@click.option("--laps", type=int, default=1, show_default=True)
@click.option("--rtol", type=float, default=1e-10, show_default=True)
@click.pass_context
def cmd_holonomy(ctx, saddle, which, start, laps, rtol):
    """Separatrix holonomy evaluated at a transversal point."""
    from .saddlenum import holonomy_numeric

    s = _saddle(saddle)
    x0 = complex(*(float(t) for t in start.split(",")))
    val = holonomy_numeric(s, which, x0, laps=laps, rtol=rtol)
    _emit(ctx, "holonomy", [{"which": which, "start": _c(x0), "laps": laps,
                             "value": _c(val)}],
          metadata={"lam": s.lam, "eps": s.eps})


@main.command("poincare")
@click.argument("saddle")
@click.argument("gluing")
@click.option("--samples", default="0.02,0;0.03,0.01;0.04,-0.01",
              show_default=True)
@click.option("--rtol", type=float, default=1e-10, show_default=True)
@click.pass_context
def cmd_poincare(ctx, saddle, gluing, samples, rtol):
    """First-return map R∘D at transversal sample points."""
    from .saddlenum import poincare_numeric

    s = _saddle(saddle)
    R = _germ(gluing)
    xs = [complex(*(float(t) for t in p.split(","))) for p in samples.split(";")]
    recs = [{"x": _c(x), "value": _c(y)}
            for x, y in poincare_numeric(s, R, xs, rtol=rtol)]
    _emit(ctx, "poincare", recs, metadata={"lam": s.lam, "eps": s.eps})


@main.command("integrability")
@click.argument("spec")
@click.pass_context
def cmd_integrability(ctx, spec):
    """Liouville-integrability class of a loop germ (saddle + gluing)."""
    from .loopclass import (LinearizableSaddle, LoopGermSpec,
                            PoincareDulacSaddle, classify_integrability)

    obj = _load_json(spec, "loop germ spec")
    sad = obj.get("saddle", {})
    stype = sad.get("type", "linearizable")
    if stype == "linearizable":
        saddle = LinearizableSaddle(float(sad["lam"]))
    elif stype == "poincare-dulac":
        mu = sad.get("mu", [0, 0])
        saddle = PoincareDulacSaddle(int(sad["k"]), complex(mu[0], mu[1]))
    else:
        raise ConfigInvalid("unknown saddle type %r" % stype)
    R = _germ(json.dumps(obj["R"]) if isinstance(obj["R"], dict) else obj["R"])
    verdict = classify_integrability(LoopGermSpec(saddle, R))
    _emit(ctx, "integrability", [verdict.to_json()])


@main.command("check-suite")
@click.argument("config", required=False)
@click.option("--output-dir", default=None,
              help="write report files (and figures) to this directory")
@click.option("--figures/--no-figures", default=False, show_default=True)
@click.pass_context
def cmd_check_suite(ctx, config, output_dir, figures):
    """Run an experiment config (default: the built-in quick suite)."""
    if config is None:
        cfg = {
            "version": 1,
            "seed": ctx.obj["seed"],
            "format": ctx.obj["format"],
            "experiments": [
                {"name": "group-laws", "kind": "group-laws",
                 "params": {"cases": 25, "validity": 4}},
                {"name": "saddle-batch", "kind": "saddle-batch",
                 "params": {"lam": 1.3, "eps": 0.02, "count": 3}},
                {"name": "corner-map", "kind": "corner-map",
                 "params": {"lam": 1.0}},
                {"name": "classifier", "kind": "classifier", "params": {}},
            ],
        }
        import tempfile

        with tempfile.NamedTemporaryFile("w", suffix=".json",
                                         delete=False) as fh:
            json.dump(cfg, fh)
            config = fh.name
    reports = report_mod.run_config(config)
    if output_dir:
        for rep in reports:
            rep.write(output_dir, ctx.obj["format"], figures)
    ok = all(r.passed for r in reports)
    for rep in reports:
        click.echo("%s: %s" % (rep.name, "pass" if rep.passed else "FAIL"))
        for failure in rep.failures:
            click.echo("  " + failure)
    if not ok:
        sys.exit(FAILURE_EXIT)


def entry():
    """Console entry point with the stable exit-code contract."""
    try:
        main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(USAGE_EXIT)
    except click.ClickException as e:
        e.show()
        sys.exit(USAGE_EXIT)
    except (ParseError, ConfigInvalid) as e:
        click.echo("error: %s" % e, err=True)
        sys.exit(USAGE_EXIT)
    except DulacError as e:
        click.echo("error: %s" % e, err=True)
        sys.exit(FAILURE_EXIT)
    except SystemExit:
        raise
    except (OSError, ValueError, KeyError) as e:
        click.echo("error: %s" % e, err=True)
        sys.exit(USAGE_EXIT)


if __name__ == "__main__":
    entry()
