"""Command-line front end: spectra, eigenfunctions, distributions, beams.

Every command writes a table, either CSV (header row, one record per
line) or JSON ({"params": ..., "rows": [...]}).  Floats are written in
shortest round-trip form, so parsing the output recovers them exactly.

Exit codes: 0 success, 1 usage error, 2 computation or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import beams, distributions
from .eigfun import eval_psi
from .spectrum import full_spectrum

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    count: int

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must look like min:max:count, got {text!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}: {exc}") from None
        if count < 2:
            raise UsageError("grid count must be at least 2")
        if not lo < hi:
            raise UsageError("grid min must be below max")
        return cls(lo, hi, count)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    def as_dict(self):
        return {"min": self.lo, "max": self.hi, "count": self.count}


@dataclass
class RunConfig:
    command: str
    c: float | None = None
    s: float | None = None
    k: list[int] = field(default_factory=lambda: [1, 2, 3])
    beta: int = 2
    n: int | None = None
    j: list[int] = field(default_factory=lambda: [0])
    alpha: float | None = None
    kind: str | None = None
    grid: Grid | None = None
    xi_grid: Grid | None = None
    out: str = "-"
    format: str = "csv"
    tol: float | None = None
    threads: int = 1
    which: int | None = None
    golden_only: bool = False
    perturb: bool = False


# ------------------------------------------------------------- formatting


def fmt(x) -> str:
    """Shortest string that parses back to the same number."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _json_value(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def render(columns, rows, params, fmt_name: str, extra=None) -> str:
    if fmt_name == "json":
        doc = {
            "params": params,
            "rows": [{c: _json_value(v) for c, v in zip(columns, r)} for r in rows],
        }
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_output(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------- commands


def cmd_spectrum(cfg: RunConfig) -> str:
    tol = cfg.tol or 1e-14
    spec = full_spectrum(cfg.c, cfg.n, tol=tol)
    p = spec.params
    rows = [
        (j, spec.chi[j], spec.lam_sign[j], spec.lam_log[j], spec.lam[j], spec.psi0[j])
        for j in range(cfg.n + 1)
    ]
    params = {"c": cfg.c, "n": cfg.n, "a": p.a, "N": p.N, "N_prime": p.N_prime, "tol": tol}
    cols = ["j", "chi", "lambda_sign", "log_abs_lambda", "lambda", "psi0"]
    return render(cols, rows, params, cfg.format)


def cmd_eigfun(cfg: RunConfig) -> str:
    grid = cfg.grid or Grid(0.0, 10.0, 201)
    x = grid.points()
    if x[0] < 0:
        raise UsageError("eigenfunctions are defined on x >= 0")
    spec = full_spectrum(cfg.c, max(cfg.j), tol=cfg.tol or 1e-14)
    vals = [eval_psi(spec.expansions[j], x) for j in cfg.j]
    rows = [(x[i], *(v[i] for v in vals)) for i in range(x.size)]
    cols = ["x"] + [f"psi_{j}" for j in cfg.j]
    params = {"c": cfg.c, "j": cfg.j, "grid": grid.as_dict(), "a": spec.params.a, "N": spec.params.N}
    return render(cols, rows, params, cfg.format)


def _dist_grid(cfg: RunConfig) -> np.ndarray:
    if cfg.s is not None:
        return np.array([cfg.s])
    return (cfg.grid or Grid(-8.0, 6.0, 141)).points()


def _dist_rows(cfg: RunConfig, which: str):
    fn = distributions.cdf if which == "cdf" else distributions.pdf
    s_vals = _dist_grid(cfg)

    def at(s):
        return [(float(s), k, fn(cfg.beta, k, float(s))) for k in cfg.k]

    rows = []
    for chunk in _map(at, s_vals, cfg.threads):
        for s, k, v in chunk:
            rows.append((s, k, v.value, v.log_value, v.est_abs_err))
    params = {"beta": cfg.beta, "k": cfg.k, "kind": which}
    if cfg.s is None:
        params["grid"] = (cfg.grid or Grid(-8.0, 6.0, 141)).as_dict()
    return ["s", "k", "value", "log_value", "est_abs_err"], rows, params


def cmd_cdf(cfg: RunConfig) -> str:
    cols, rows, params = _dist_rows(cfg, "cdf")
    return render(cols, rows, params, cfg.format)


def cmd_pdf(cfg: RunConfig) -> str:
    cols, rows, params = _dist_rows(cfg, "pdf")
    return render(cols, rows, params, cfg.format)


TABLE1_CASES = [(c, n) for c in (20.0, 0.0, -20.0) for n in (50, 100, 200, 400)]
TABLE_DIST_CASES = [
    (1, 50.0), (1, 25.0), (1, 10.0), (1, 5.0), (1, 2.0), (1, 0.0), (1, -2.0), (1, -5.0), (1, -10.0), (1, -20.0),
    (2, 30.0), (2, 0.0), (2, -4.0), (2, -6.0), (2, -10.0), (2, -12.0),
    (3, 15.0), (3, 4.0), (3, -4.0), (3, -8.0), (3, -10.0), (3, -13.0),
]


def cmd_table(cfg: RunConfig) -> str:
    which = cfg.which or 1
    if which == 1:
        rows = []
        for c, n in TABLE1_CASES:
            t0 = time.perf_counter()
            spec = full_spectrum(c, n)
            dt = time.perf_counter() - t0
            rows.append((c, n, spec.params.N, spec.params.a, dt))
        return render(["c", "n", "N", "a", "seconds"], rows, {"table": 1}, cfg.format)
    fn = distributions.pdf_gue if which == 2 else distributions.cdf_gue
    rows = []
    for k, s in TABLE_DIST_CASES:
        t0 = time.perf_counter()
        f = distributions.spectral_factors(s, 2)
        v = fn(k, s, f)
        dt = time.perf_counter() - t0
        rel = v.est_abs_err / abs(v.value) if v.value else math.inf
        rows.append((k, s, f.count, f.n, dt, rel, v.est_abs_err, v.value, v.log_value))
    cols = ["k", "s", "eigenvalues_used", "n_computed", "seconds", "est_rel_err", "est_abs_err", "value", "log_value"]
    return render(cols, rows, {"table": which, "beta": 2}, cfg.format)


def beam_profile(cfg: RunConfig) -> beams.BeamProfile:
    """Propagated beam on the requested window (shared by the CLI and tests)."""
    sg = cfg.grid or Grid(*beams.DEFAULT_S)
    xg = cfg.xi_grid or Grid(*beams.DEFAULT_XI)
    xi = xg.points()
    xi_max = float(np.max(np.abs(xi)))
    # room on the right for the parabolic drift of the main lobe
    right = sg.hi + 0.25 * xi_max**2 + 20.0
    if cfg.kind == "eigen":
        dens = beams.eigen_density(cfg.c)
        return beams.propagate_density(dens, sg.points(), xi, threads=cfg.threads)
    if cfg.kind == "finite":
        left = min(sg.lo, beams.finite_airy_left_extent(cfg.alpha))
        grid, sl = beams.padded_grid(sg.lo, sg.hi, sg.count, left, right)
        init = beams.finite_airy_initial(cfg.alpha, grid)
    else:
        start = sg.lo - 3.0 * xi_max * math.sqrt(max(-sg.lo, 1.0)) - 50.0
        left = start - 6.0 * 25.0
        grid, sl = beams.padded_grid(sg.lo, sg.hi, sg.count, left, right)
        init = beams.infinite_airy_initial(grid, taper_start=start)
    full = beams.propagate(init, grid, xi)
    return beams.BeamProfile(grid[sl], xi, full.amplitude[:, sl], full.energy)


def cmd_beam(cfg: RunConfig) -> str:
    prof = beam_profile(cfg)
    inten = prof.intensity
    rows = [
        (prof.xi_grid[i], prof.s_grid[m], inten[i, m])
        for i in range(prof.xi_grid.size)
        for m in range(prof.s_grid.size)
    ]
    sg = cfg.grid or Grid(*beams.DEFAULT_S)
    xg = cfg.xi_grid or Grid(*beams.DEFAULT_XI)
    params = {"kind": cfg.kind, "alpha": cfg.alpha, "c": cfg.c, "s_grid": sg.as_dict(), "xi_grid": xg.as_dict()}
    if cfg.format == "json":
        # the initial profile Phi(s, 0) itself, not only its intensity
        init = _initial_row(cfg, prof.s_grid)
        extra = {"initial_profile": [float(v) for v in init]}
        return render(["xi", "s", "intensity"], rows, params, "json", extra)
    return render(["xi", "s", "intensity"], rows, params, "csv")


def _initial_row(cfg, s):
    if cfg.kind == "finite":
        return beams.finite_airy_initial(cfg.alpha, s)
    if cfg.kind == "eigen":
        return beams.eigen_beam_initial(cfg.c, s)
    return beams.infinite_airy_initial(s)


# ---------------------------------------------------------------- selftest

GOLDEN_CDF = [(1, 0.0, 9.69373e-1), (2, -4.0, 3.35602e-1), (3, -4.0, 9.59838e-1)]
GOLDEN_PDF = [(1, 0.0, 6.69753e-2), (1, -2.0, 4.41382e-1), (2, 0.0, 1.21766e-5), (3, -4.0, 1.25051e-1)]


def selftest_checks(golden_only: bool = False, perturb: bool = False):
    """List of (name, passed, detail) for the built-in invariant suite."""
    from .eigfun import dchi_dc
    from .identities import identity_suite
    from .spectrum import dlambda_dc

    out = []
    for k, s, ref in GOLDEN_CDF:
        v = distributions.cdf_gue(k, s).value
        out.append((f"cdf F2({k};{s:g})", f"{v:.5e}" == f"{ref:.5e}", f"{v:.6e} vs {ref:.5e}"))
    for k, s, ref in GOLDEN_PDF:
        v = distributions.pdf_gue(k, s).value
        out.append((f"pdf F2'({k};{s:g})", f"{v:.5e}" == f"{ref:.5e}", f"{v:.6e} vs {ref:.5e}"))
    if golden_only:
        return out
    for c in (0.5, 2.0):
        spec = full_spectrum(c, 8)
        if perturb:
            lam = spec.lam.copy()
            lam[0] += 1e-8
            spec = replace(spec, lam=lam)
        worst = {}
        for chk in identity_suite(spec, 5):
            key = chk.name.split("(")[0]
            worst[key] = max(worst.get(key, 0.0), chk.rel_err)
        for key, err in worst.items():
            lim = 1e-9 if key == "boundary_relation" else 1e-10
            out.append((f"{key} c={c:g}", err <= lim, f"max rel err {err:.2e}"))
        h = 1e-4
        hi, lo = full_spectrum(c + h, 8), full_spectrum(c - h, 8)
        for j in range(6):
            fd = (hi.lam[j] - lo.lam[j]) / (2 * h)
            an = dlambda_dc(spec, j)
            err = abs(fd - an) / abs(an)
            out.append((f"dlambda_dc j={j} c={c:g}", err <= 1e-6, f"rel err {err:.2e}"))
            fd = (hi.chi[j] - lo.chi[j]) / (2 * h)
            an = dchi_dc(spec, j)
            err = abs(fd - an) / abs(an)
            out.append((f"dchi_dc j={j} c={c:g}", err <= 1e-6, f"rel err {err:.2e}"))
    return out


def cmd_selftest(cfg: RunConfig) -> int:
    checks = selftest_checks(cfg.golden_only, cfg.perturb)
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        failed += not ok
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_COMPUTE


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _grid(text):
    try:
        return Grid.parse(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="airyspec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", default="-", help="output file ('-' for stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("spectrum", help="chi_j, lambda_j, psi_j(0) for j = 0..n")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    common(sp)

    sp = sub.add_parser("eigfun", help="psi_j sampled on a grid")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--j", type=_int_list, default=[0], help="indices, e.g. 0,1,3")
    sp.add_argument("--grid", type=_grid, default=None, help="min:max:count (default 0:10:201)")
    common(sp)

    for name in ("cdf", "pdf"):
        sp = sub.add_parser(name, help=f"{name} of the k-th largest soft-edge level")
        sp.add_argument("--beta", type=int, default=2)
        sp.add_argument("--k", type=_int_list, default=[1, 2, 3])
        sp.add_argument("--s", type=float, default=None, help="single point (overrides --grid)")
        sp.add_argument("--grid", type=_grid, default=None, help="min:max:count (default -8:6:141)")
        common(sp)

    sp = sub.add_parser("table", help="regenerate the timing/accuracy tables (1, 2 or 3)")
    sp.add_argument("--which", type=int, choices=[1, 2, 3], default=1)
    common(sp)

    sp = sub.add_parser("beam", help="propagated beam intensity")
    sp.add_argument("--kind", choices=["finite", "eigen", "infinite"], required=True)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--grid", type=_grid, default=None, help="s window min:max:count (default -60:30:4096)")
    sp.add_argument("--xi-grid", dest="xi_grid", type=_grid, default=None, help="xi rows (default 0:12:256)")
    common(sp)

    sp = sub.add_parser("selftest", help="run the built-in invariant suite")
    sp.add_argument("--golden-only", action="store_true", help="only the golden table rows")
    sp.add_argument("--perturb", action="store_true", help=argparse.SUPPRESS)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = {k: v for k, v in vars(ns).items() if v is not None}
    cfg = RunConfig(**d)
    if cfg.beta not in (1, 2, 4):
        raise UsageError("--beta must be 1, 2 or 4")
    if any(k < 1 for k in cfg.k):
        raise UsageError("--k values must be >= 1")
    if any(j < 0 for j in cfg.j):
        raise UsageError("--j values must be >= 0")
    if cfg.n is not None and cfg.n < 0:
        raise UsageError("--n must be >= 0")
    if cfg.threads < 1:
        raise UsageError("--threads must be >= 1")
    if cfg.tol is not None and not cfg.tol > 0:
        raise UsageError("--tol must be positive")
    if cfg.command == "beam":
        if cfg.kind == "finite" and not (cfg.alpha and cfg.alpha > 0):
            raise UsageError("--kind finite needs a positive --alpha")
        if cfg.kind == "eigen" and cfg.c is None:
            raise UsageError("--kind eigen needs --c")
    return cfg


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigfun": cmd_eigfun,
    "cdf": cmd_cdf,
    "pdf": cmd_pdf,
    "table": cmd_table,
    "beam": cmd_beam,
}


def _join_negative_values(argv):
    """Turn ``--grid -8:6:141`` into ``--grid=-8:6:141``.

    argparse would otherwise read a value that starts with a minus sign as
    an option.  Numeric options such as ``--s -2`` are already handled.
    """
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--grid", "--xi-grid"):
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            elif nxt.startswith("-") and ":" in nxt:
                out.append(f"{tok}={nxt}")
            else:
                out.extend((tok, nxt))
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
        if cfg.command == "selftest":
            return cmd_selftest(cfg)
        text = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"airyspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # computation failures map to a single exit code
        print(f"airyspec: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    try:
        write_output(text, cfg.out)
    except OSError as exc:
        print(f"airyspec: cannot write output: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
