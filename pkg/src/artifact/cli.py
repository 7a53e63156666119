"""Command-line front end (`rlt`)."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import click

from . import lattice as lat
from .errors import ArtifactError, BadParameter, FixtureMissing, IOFailure, MissingMajorant
from .lattice import discriminant_group, load_lattice, majorant, representation_numbers
from .maass import FourierExpansion
from .report import plot_checks, plot_table, table_text, write_csv, write_json
from .weilrep import weilrep_for


@dataclass
class RunConfig:
    target_series: float = 1e-8
    target_integral: float = 1e-4
    lattice_cutoff: float = 40.0
    C: int = 100
    C_lsharp: int = 40
    C_eisenstein: int = 40
    T_max: float = 200.0
    quad_n: int = 20
    quad_refine: int = 8
    fd_step: float = 1e-4
    seed: int = 7
    jobs: int = 1
    cache_dir: str = ""
    fixtures: dict = field(default_factory=dict)
    format: str = "json"

    def __post_init__(self):
        for f in ("lattice_cutoff", "C", "C_lsharp", "C_eisenstein", "T_max", "quad_n", "fd_step", "jobs"):
            if not getattr(self, f) > 0:
                raise BadParameter(f"config value {f} must be positive")
        if self.format not in ("json", "csv"):
            raise BadParameter("format must be json or csv")

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, doc):
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise BadParameter(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**doc)

    def quad(self):
        from .reglift import QuadConfig
        return QuadConfig(n_u=self.quad_n, n_v=self.quad_n, refine=self.quad_refine)


# --------------------------------------------------------------------------
# parsing helpers

def parse_fraction(s):
    try:
        return Fraction(str(s).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise BadParameter(f"not a rational number: {s!r}") from e


def parse_range(s):
    """'a..b' (inclusive, step 1), 'a,b,c', or a single value; empty string gives []."""
    s = (s or "").strip()
    if not s:
        return []
    if ".." in s:
        a, b = s.split("..", 1)
        a, b = parse_fraction(a), parse_fraction(b)
        out, x = [], a
        while x <= b:
            out.append(x)
            x += 1
        return out
    return [parse_fraction(x) for x in s.split(",") if x.strip()]


def parse_complex(s):
    try:
        return complex(str(s).replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise BadParameter(f"not a complex number: {s!r}") from e


def parse_floats(s):
    return [float(x) for x in parse_range(s)]


def _lattice(ctx, spec):
    fx = ctx.obj["config"].fixtures
    if spec in fx:
        spec = fx[spec]
    try:
        return load_lattice(spec)
    except FileNotFoundError as e:
        raise FixtureMissing(f"lattice {spec!r} is neither a fixture nor a readable file") from e


def _majorant(L, zfile, h2):
    if h2:
        from .reglift import h2_point
        z1, z2 = (parse_complex(x) for x in h2.split(","))
        return h2_point(L, z1, z2)
    if zfile is None:
        if L.signature[1] == 0:
            return None
        raise MissingMajorant("indefinite lattice needs --z FILE or --h2 z1,z2")
    try:
        doc = json.loads(Path(zfile).read_text())
    except OSError as e:
        raise IOFailure(str(e)) from e
    vecs = [[float(parse_fraction(x)) for x in row] for row in doc]
    return majorant(L, vecs)


def _expansion(path):
    try:
        return FourierExpansion.from_json(json.loads(Path(path).read_text()))
    except OSError as e:
        raise IOFailure(str(e)) from e


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _emit(ctx, obj, out=None):
    from .report import dumps
    text = dumps(obj)
    if out:
        try:
            write_json(out, obj)
        except OSError as e:
            raise IOFailure(str(e)) from e
    else:
        click.echo(text)


def _emit_table(rows, out, title="", header=None):
    kw = {"header": header} if header else {}
    if out:
        try:
            write_csv(out, rows, **kw)
            if rows:
                plot_table(rows, out, title)
        except OSError as e:
            raise IOFailure(str(e)) from e
    else:
        click.echo(table_text(rows, **kw), nl=False)


# --------------------------------------------------------------------------

@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON RunConfig file.")
@click.option("--jobs", type=int, default=None, help="Worker threads for independent jobs.")
@click.option("--C", "C", type=int, default=None, help="Coset bound for Poincare and Eisenstein sums.")
@click.pass_context
def cli(ctx, config_path, jobs, C):
    """Regularized theta lifts, Green functions and L# on even lattices."""
    doc = {}
    if config_path:
        try:
            doc = json.loads(Path(config_path).read_text())
        except (OSError, ValueError) as e:
            raise IOFailure(f"cannot read config: {e}") from e
    cfg = RunConfig.from_json(doc)
    if jobs is not None:
        cfg.jobs = jobs
    if C is not None:
        cfg.C = C
    if cfg.cache_dir:
        import os
        os.environ.setdefault("RLT_CACHE_DIR", cfg.cache_dir)
    ctx.obj = {"config": cfg}


@cli.command("lattice")
@click.argument("spec")
@click.option("--count", "count", type=str, default=None, help="Representation numbers up to this norm (definite).")
@click.pass_context
def lattice_cmd(ctx, spec, count):
    """Gram data, signature and discriminant form."""
    L = _lattice(ctx, spec)
    D = discriminant_group(L)
    out = {"name": L.name, "gram": [list(r) for r in L.gram], "signature": list(L.signature), "rank": L.rank,
           "level": L.level, "discriminant": {"order": D.order, "invariants": list(D.elementary),
                                              "q_values": [str(q) for q in D.q_values]}}
    if count is not None:
        bound = parse_fraction(count)
        out["representation_numbers"] = {
            str(mu): {str(m): int(c) for m, c in sorted(representation_numbers(L, bound, mu).items())}
            for mu in range(D.order)}
    _emit(ctx, out)


@cli.command("weilrep")
@click.argument("spec")
@click.option("--conjugate", is_flag=True, help="The conjugate (S(L)-side) representation.")
@click.pass_context
def weilrep_cmd(ctx, spec, conjugate):
    """rho(S), rho(T) and the relation residuals."""
    L = _lattice(ctx, spec)
    wr = weilrep_for(L, conjugate=conjugate)
    mat = lambda M: [[_c(x) for x in row] for row in M]
    _emit(ctx, {"S": mat(wr.S), "T": mat(wr.T), "residuals": wr.relation_residuals()})


@cli.command("theta")
@click.argument("spec")
@click.option("--tau", required=True)
@click.option("--z", "zfile", type=click.Path(), default=None, help="JSON list of vectors spanning z.")
@click.option("--h2", default=None, help="z1,z2 in H x H (2U only).")
@click.pass_context
def theta_cmd(ctx, spec, tau, zfile, h2):
    """Siegel theta (indefinite) or theta series (definite) at tau."""
    from .series import DefiniteTheta, SiegelTheta
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    t = parse_complex(tau)
    z = _majorant(L, zfile, h2)
    h = DefiniteTheta(L) if z is None else SiegelTheta(L, z, cfg.lattice_cutoff)
    _emit(ctx, {"tau": _c(t), "value": [_c(x) for x in h.evaluate(t)], "error": h.error_estimate(t),
                "weight": str(h.weight)})


@cli.command("poincare")
@click.argument("spec")
@click.option("--kind", type=click.Choice(["truncated", "hejhal"]), default="truncated")
@click.option("--k", "k", required=True)
@click.option("--m", "m", required=True)
@click.option("--mu", type=int, default=0)
@click.option("--w", type=float, default=1.0, help="Truncation height (truncated kind).")
@click.option("--tau", required=True)
@click.pass_context
def poincare_cmd(ctx, spec, kind, k, m, mu, w, tau):
    """Truncated or Hejhal Poincare series at tau."""
    from .series import HejhalPoincare, TruncatedPoincare
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    t = parse_complex(tau)
    if kind == "truncated":
        h = TruncatedPoincare(L, parse_fraction(k), parse_fraction(m), mu, w)
        err = 0.0
    else:
        h = HejhalPoincare(L, parse_fraction(k), parse_fraction(m), mu, cfg.C)
        err = h.tail_bound(t)
    _emit(ctx, {"tau": _c(t), "value": [_c(x) for x in h.evaluate(t)], "error": err})


@cli.command("eisenstein")
@click.argument("spec")
@click.option("--k", "k", required=True)
@click.option("--s", "s", required=True)
@click.option("--tau", required=True)
@click.pass_context
def eisenstein_cmd(ctx, spec, k, s, tau):
    """E_k(tau, s) by direct coset summation."""
    from .series import Eisenstein
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    t = parse_complex(tau)
    E = Eisenstein(L, parse_fraction(k), parse_complex(s), cfg.C)
    _emit(ctx, {"tau": _c(t), "value": [_c(x) for x in E.evaluate(t)], "error": E.tail_bound(t)})


@cli.command("green")
@click.option("--kind", type=click.Choice(["kudla", "kudla-lift", "bruinier", "diff"]), default="kudla")
@click.option("--lattice", "spec", required=True)
@click.option("--m", "m", required=True)
@click.option("--w", type=float, default=1.0)
@click.option("--mu", type=int, default=0)
@click.option("--z", "zfile", type=click.Path(), default=None)
@click.option("--h2", default=None, help="z1,z2 in H x H (2U only).")
@click.pass_context
def green_cmd(ctx, kind, spec, m, w, mu, zfile, h2):
    """Kudla (beta-sum or lift), Bruinier, or their difference."""
    from .reglift import bruinier_green, kudla_green_direct, kudla_green_via_lift
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    z = _majorant(L, zfile, h2)
    m = parse_fraction(m)
    logT = 0.0
    if kind == "kudla":
        val, err = kudla_green_direct(L, m, w, mu, z, cfg.lattice_cutoff)
    elif kind == "kudla-lift":
        r = kudla_green_via_lift(L, m, w, mu, z, cfg.quad(), cfg.lattice_cutoff)
        val, err, logT = r.value, r.quadrature_error, r.logT_coefficient
    elif kind == "bruinier":
        r = bruinier_green(L, m, mu, z, cfg.C, cfg.quad(), cfg.lattice_cutoff)
        val, err, logT = r.value, r.quadrature_error, r.logT_coefficient
    else:
        k, ek = kudla_green_direct(L, m, w, mu, z, cfg.lattice_cutoff)
        r = bruinier_green(L, m, mu, z, cfg.C, cfg.quad(), cfg.lattice_cutoff)
        val, err = k - r.value, ek + r.quadrature_error
    _emit(ctx, {"kind": kind, "m": str(m), "w": w, "value": _c(val), "error": float(err), "logT": _c(logT)})


@cli.command("green-series")
@click.option("--lattice", "spec", required=True)
@click.option("--M", "M", type=int, default=8)
@click.option("--v", type=float, default=1.0)
@click.option("--z", "zfile", type=click.Path(), default=None)
@click.option("--h2", default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def green_series_cmd(ctx, spec, M, v, zfile, h2, out):
    """Coefficients <P_{m,v} - F_m, Theta(., z)>^reg for |m| <= M."""
    from .reglift import green_generating_series
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    z = _majorant(L, zfile, h2)
    g = green_generating_series(L, z, M, v, C=cfg.C, cfg=cfg.quad())
    rows = [(str(m), 0, complex(c).real, complex(c).imag, float(g.errors[m])) for m, c in sorted(g.coefficients.items())]
    _emit_table(rows, out, f"generating series, v = {v}")


def _input_handle(ctx, spec):
    """'theta:LATTICE' or a FourierExpansion JSON file."""
    from .series import DefiniteTheta, ExpansionHandle
    if spec.startswith("theta:"):
        L = _lattice(ctx, spec[len("theta:"):])
        return DefiniteTheta(L, 12)
    F = _expansion(spec)
    return ExpansionHandle(F)


@cli.command("lsharp")
@click.option("--input", "inp", required=True, help="theta:LATTICE or an expansion JSON file.")
@click.option("--m", "m_range", default="0..2")
@click.option("--v", "v_list", default="1,2,4")
@click.option("--cusp", "cusp", multiple=True, type=click.Path(), help="Cusp form expansion JSON (repeatable).")
@click.option("--declare-empty-cusp-space", "empty", is_flag=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def lsharp_cmd(ctx, inp, m_range, v_list, cusp, empty, out):
    """Coefficient table c_F(m, v) of F = L#(f)."""
    from .lsharp import OperatorConfig, cuspidal_projection, lsharp_coefficients
    cfg = ctx.obj["config"]
    f = _input_handle(ctx, inp)
    ms = parse_range(m_range)
    vs = parse_floats(v_list)
    rows = []
    if ms:
        ocfg = OperatorConfig(fd_step=cfg.fd_step, cusp_basis=[_expansion(p) for p in cusp],
                              cusp_basis_declared_empty=empty)
        ls, table = lsharp_coefficients(f, ms, vs, C=cfg.C_lsharp, cfg=ocfg, quad=cfg.quad(), jobs=cfg.jobs)
        rows = [(str(m), mu, w, complex(c).real, complex(c).imag, float(e)) for m, mu, w, c, e in table]
        proj = cuspidal_projection(ls.handle(), ocfg, cfg.quad()) if ocfg.cusp_basis else []
        for i, r in enumerate(proj):
            click.echo(f"cusp form {i}: <F, h>^reg = {complex(r.value):.17g}", err=True)
    _emit_table(rows, out, f"L#({inp})", header=["m", "component", "v", "re", "im", "error"])


@cli.command("mock")
@click.option("--shadow", "shadow", required=True, type=click.Path(), help="Holomorphic f0 expansion JSON.")
@click.option("--lattice", "spec", required=True)
@click.option("--m", "m_range", default="0..4")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def mock_cmd(ctx, shadow, spec, m_range, out):
    """Holomorphic-part coefficients <F_m, -v^k conj(f0)>^reg."""
    from .lsharp import mock_series
    cfg = ctx.obj["config"]
    L = _lattice(ctx, spec)
    f0 = _expansion(shadow)
    ms = parse_range(m_range)
    rows = []
    if ms:
        coeffs, ls = mock_series(f0, L, ms, C=cfg.C, quad=cfg.quad())
        rows = [(str(m), 0, complex(c).real, complex(c).imag, float(ls.errors.get((m, 0), 0.0)))
                for m, c in sorted(coeffs.items())]
    _emit_table(rows, out, "mock modular coefficients")


@cli.command("rankin")
@click.option("--g", "gfile", required=True, type=click.Path())
@click.option("--lattice", "spec", required=True)
@click.option("--s", "s", type=float, default=2.0)
@click.option("--M", "M", type=int, default=10)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def rankin_cmd(ctx, gfile, spec, s, M, out):
    """Partial sums of the Rankin-Selberg series L(s, g, Theta) (diagnostic)."""
    from .lsharp import rankin_partial_sums
    from .series import DefiniteTheta
    L = _lattice(ctx, spec)
    g = _expansion(gfile)
    Th = DefiniteTheta(L, M)
    coeffs = {m: Th.mu(m) for mu in range(Th.dim) for m in
              [Fraction(discriminant_group(L).q_values[mu]) + n for n in range(M + 1)] if 0 < m <= M}
    sums = rankin_partial_sums(g, coeffs, s, float(g.weight), M)
    rows = [(str(m), 0, complex(v).real, complex(v).imag, 0.0) for m, v in sums]
    _emit_table(rows, out, f"Rankin-Selberg partial sums, s = {s}")


@cli.command("table")
@click.argument("kind", type=click.Choice(["theta", "lsharp"]))
@click.option("--input", "inp", required=True, help="LATTICE for theta; theta:LATTICE or file for lsharp.")
@click.option("--range", "rng", default="0..5")
@click.option("--v", type=float, default=1.0)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def table_cmd(ctx, kind, inp, rng, v, out):
    """CSV tables with columns m, component, re, im, error."""
    cfg = ctx.obj["config"]
    ms = parse_range(rng)
    rows = []
    if kind == "theta":
        L = _lattice(ctx, inp)
        D = discriminant_group(L)
        if ms:
            counts = {mu: representation_numbers(L, max(ms), mu) for mu in range(D.order)}
            for mu in range(D.order):
                for m in sorted(counts[mu]):
                    if min(ms) <= m <= max(ms):
                        rows.append((str(m), mu, float(counts[mu][m]), 0.0, 0.0))
    else:
        from .lsharp import OperatorConfig, lsharp_coefficients
        f = _input_handle(ctx, inp)
        if ms:
            ls, table = lsharp_coefficients(f, ms, [v], C=cfg.C_lsharp,
                                            cfg=OperatorConfig(cusp_basis_declared_empty=True),
                                            quad=cfg.quad(), jobs=cfg.jobs)
            rows = [(str(m), mu, complex(c).real, complex(c).imag, float(e)) for m, mu, _, c, e in table]
    rows.sort(key=lambda r: (r[1], Fraction(r[0])))
    _emit_table(rows, out, f"{kind} {inp}")


@cli.command("verify")
@click.argument("suite")
@click.option("--out", type=click.Path(), default=None, help="JSON report (figure written next to it).")
@click.pass_context
def verify_cmd(ctx, suite, out):
    """Run an identity suite; exit 1 if any check fails."""
    from .suites import run_suite
    cfg = ctx.obj["config"]
    checks = [c.to_json() for c in run_suite(suite, cfg.to_json())]
    report = {"suite": suite, "checks": checks, "pass": all(c["pass"] for c in checks)}
    for c in checks:
        click.echo(f"{'PASS' if c['pass'] else 'FAIL'}  {c['test']}  residual={c['residual']:.3e}  "
                   f"tol={c['tolerance']:.1e}", err=True)
    if out:
        write_json(out, report)
        plot_checks(checks, out)
    else:
        _emit(ctx, report)
    if not report["pass"]:
        sys.exit(1)


@cli.command("cache")
@click.argument("action", type=click.Choice(["stat", "clear", "warm"]))
@click.option("--lattice", "spec", default="D4")
@click.option("--bound", default="10")
@click.pass_context
def cache_cmd(ctx, action, spec, bound):
    """Inspect, clear or pre-fill the enumeration cache ($RLT_CACHE_DIR)."""
    d = lat.cache_dir()
    path = d / "enum_cache.json" if d else None
    loaded = lat.load_cache(path) if path else 0
    if loaded < 0:
        click.echo("warning: cache file was corrupted and has been rebuilt", err=True)
    if action == "clear":
        lat.clear_cache(path)
    elif action == "warm":
        L = _lattice(ctx, spec)
        for mu in range(discriminant_group(L).order):
            lat.enumerate_coset_vectors(L, mu, bound=parse_fraction(bound))
        if path:
            lat.save_cache(path)
    stats = lat.cache_stats()
    stats["path"] = str(path) if path else ""
    _emit(ctx, stats)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="rlt", standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(2)
    except ArtifactError as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(e.exit_code)
    except SystemExit:
        raise
    sys.exit(0)


if __name__ == "__main__":
    main()
