"""Command-line front end.

    python3 -m cylgrating SUBCOMMAND [--config PATH ...] [--out PATH]
                          [--format csv|json] [--jobs K]

Subcommands: sums, coeffs-exact, coeffs-asymptotic, compare, field-grid,
selftest.  Configuration is an INI file with the sections [grating], [wave],
[solver], [output] and [grid]; angles are given in degrees.  Exit status is
0 on success, 1 for configuration errors and 2 for numerical failures.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import configparser
from dataclasses import dataclass
from importlib import resources
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import asymptotic, exact, fields, lattice, model
from . import special as sf
from .errors import ConfigError, GratingError, InvalidParameters

SUBCOMMANDS = ("sums", "coeffs-exact", "coeffs-asymptotic", "compare", "field-grid", "selftest")

# section -> key -> (type, required, default)
SCHEMA = {
    "grating": {
        "radius_a": (float, True, None),
        "spacing_d": (float, True, None),
        "eps_r": (float, True, None),
        "mu_r": (float, False, 1.0),
    },
    "wave": {
        "k0": (float, True, None),
        "theta_i": (float, True, None),
        "psi_i": (float, False, 180.0),
        "amplitude_E0v": (float, False, 1.0),
    },
    "solver": {
        "n_trunc": (int, False, 12),
        "m_trunc": (int, False, 4),
        "tol": (float, False, 1e-10),
        "method": (str, False, "direct"),
        "n_sums": (int, False, 6),
    },
    "output": {
        "format": (str, False, "csv"),
        "path": (str, False, ""),
    },
    "grid": {
        "x0": (float, False, None),
        "x1": (float, False, None),
        "y0": (float, False, None),
        "y1": (float, False, None),
        "nx": (int, False, 11),
        "ny": (int, False, 11),
        "z": (float, False, 0.0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    params: model.GratingParams
    wave: model.IncidentWave
    solver: dict
    output: dict
    grid: dict
    source: str = ""


def default_config_text():
    return resources.files("cylgrating").joinpath("default.ini").read_text()


def parse_config(text, source="<string>"):
    """Parse and validate configuration text; raises ConfigError."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (typ, required, default) in keys.items():
            if cp.has_option(section, key):
                raw = cp.get(section, key).strip()
                try:
                    values[section][key] = typ(raw)
                except ValueError:
                    raise ConfigError(
                        f"{source}: [{section}] {key} = {raw!r} is not a valid {typ.__name__}"
                    ) from None
            elif required:
                raise ConfigError(f"{source}: missing required key '{key}' in [{section}]")
            else:
                values[section][key] = default
    g, w = values["grating"], values["wave"]
    try:
        params = model.GratingParams(g["radius_a"], g["spacing_d"], g["eps_r"], g["mu_r"])
        wave = model.IncidentWave(
            w["k0"], math.radians(w["theta_i"]), math.radians(w["psi_i"]), w["amplitude_E0v"]
        )
    except InvalidParameters as exc:
        raise ConfigError(f"{source}: {exc}") from None
    solver = values["solver"]
    if solver["method"] not in ("direct", "neumann"):
        raise ConfigError(f"{source}: [solver] method must be 'direct' or 'neumann'")
    if solver["n_trunc"] < 0 or solver["m_trunc"] < 1 or solver["n_sums"] < 0:
        raise ConfigError(f"{source}: truncation orders must be non-negative (m_trunc >= 1)")
    if values["output"]["format"] not in ("csv", "json"):
        raise ConfigError(f"{source}: [output] format must be 'csv' or 'json'")
    return RunConfig(params, wave, solver, values["output"], values["grid"], source)


def load_config(path):
    if path is None:
        return parse_config(default_config_text(), "default.ini")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)


# ---------------------------------------------------------------------------
# output


def fmt(v):
    """Locale-independent text for a table cell: 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.16e}"


@dataclass
class Table:
    columns: list
    rows: list
    extra: dict = None

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def to_json(self, subcommand):
        doc = {"subcommand": subcommand, "columns": self.columns, "rows": self.rows}
        if self.extra:
            doc.update(self.extra)
        return _json(doc) + "\n"


def _json(obj):
    # floats in exponent notation; json.loads reads them back bit-exactly
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    text = fmt(obj)
    return json.dumps(text) if text in ("nan", "inf", "-inf") else text


# ---------------------------------------------------------------------------
# subcommands


def cmd_sums(cfg):
    derived = model.derive(cfg.params, cfg.wave)
    D, psi = derived.Delta, cfg.wave.psi_i
    n_max = cfg.solver["n_sums"]
    single = D * (1 + abs(cfg.wave.sin_psi)) < 1
    rows = []
    for n in range(-n_max, n_max + 1):
        direct = lattice.direct_sum(n, D, psi, tol=min(cfg.solver["tol"], 1e-10))
        elem = lattice.elementary(n, D, psi)
        asym = lattice.leading_terms(n, D, psi) if single else complex(math.nan, math.nan)
        scale = max(abs(direct), 1.0)  # odd orders vanish at normal incidence
        rows.append([
            n, direct.real, direct.imag, elem.real, elem.imag, asym.real, asym.imag,
            abs(elem - direct) / scale, abs(asym - direct) / scale,
        ])
    cols = ["n", "re_direct", "im_direct", "re_elementary", "im_elementary",
            "re_asymptotic", "im_asymptotic", "dev_elementary_direct", "dev_asymptotic_direct"]
    return Table(cols, rows)


def _exact(cfg):
    p, w = cfg.params, cfg.wave
    derived = model.derive(p, w)
    N = cfg.solver["n_trunc"]
    system = exact.assemble(p, w, derived, None, N)
    if cfg.solver["method"] == "neumann":
        return exact.solve_neumann(system, tol=cfg.solver["tol"])
    return exact.solve_direct(system)


def _coeff_rows(cs):
    return [[int(n), cs.A[n].real, cs.A[n].imag, cs.A_H[n].real, cs.A_H[n].imag, cs.residual]
            for n in sorted(cs.A)]


def cmd_coeffs_exact(cfg):
    cs = _exact(cfg)
    cols = ["n", "re_A", "im_A", "re_A_H", "im_A_H", "residual"]
    return Table(cols, _coeff_rows(cs))


def _asymptotic(cfg):
    derived = model.derive(cfg.params, cfg.wave)
    aset = asymptotic.solve_asymptotic(
        cfg.params, cfg.wave, derived, m_trunc=cfg.solver["m_trunc"], tol=1e-8
    )
    return aset, asymptotic.reconstruct(aset, derived, cfg.params)


def cmd_coeffs_asymptotic(cfg):
    aset, cs = _asymptotic(cfg)
    rows = []
    for p in sorted(aset.omega):
        w = aset.omega[p]
        rows.append([p, asymptotic.scale_exponent(p), w[0].real, w[0].imag, w[1].real, w[1].imag,
                     cs.A[p].real, cs.A[p].imag, cs.A_H[p].real, cs.A_H[p].imag])
    cols = ["p", "exponent", "re_A0", "im_A0", "re_A0_H", "im_A0_H",
            "re_A", "im_A", "re_A_H", "im_A_H"]
    return Table(cols, rows)


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else (0.0 if a == 0 else math.inf)


def compare_table(ex_A, ex_AH, as_A, as_AH):
    rows = []
    for n in sorted(set(ex_A) & set(as_A), key=lambda k: (abs(k), k)):
        rows.append([
            n, ex_A[n].real, ex_A[n].imag, as_A[n].real, as_A[n].imag,
            _rel(as_A[n], ex_A[n]), _rel(as_AH[n], ex_AH[n]),
        ])
    cols = ["n", "re_A_exact", "im_A_exact", "re_A_asymptotic", "im_A_asymptotic",
            "rel_err_A", "rel_err_A_H"]
    return cols, rows


def _pack(cs):
    return {str(n): [cs.A[n].real, cs.A[n].imag, cs.A_H[n].real, cs.A_H[n].imag]
            for n in sorted(cs.A)}


def _unpack(d):
    A = {int(k): complex(v[0], v[1]) for k, v in d.items()}
    AH = {int(k): complex(v[2], v[3]) for k, v in d.items()}
    return A, AH


def cmd_compare(cfg):
    ex = _exact(cfg)
    _, asy = _asymptotic(cfg)
    cols, rows = compare_table(ex.A, ex.A_H, asy.A, asy.A_H)
    return Table(cols, rows, {"exact": _pack(ex), "asymptotic": _pack(asy)})


def compare_from_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        eA, eAH = _unpack(doc["exact"])
        aA, aAH = _unpack(doc["asymptotic"])
    except (OSError, ValueError, KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"cannot read comparison data from {path}: {exc}") from None
    cols, rows = compare_table(eA, eAH, aA, aAH)
    return Table(cols, rows, {"exact": doc["exact"], "asymptotic": doc["asymptotic"]})


def cmd_field_grid(cfg):
    p, w = cfg.params, cfg.wave
    g = cfg.grid
    d = p.spacing_d
    x0 = -0.5 * d if g["x0"] is None else g["x0"]
    x1 = 0.5 * d if g["x1"] is None else g["x1"]
    y0 = -0.5 * d if g["y0"] is None else g["y0"]
    y1 = 0.5 * d if g["y1"] is None else g["y1"]
    if g["nx"] < 1 or g["ny"] < 1:
        raise ConfigError("[grid] nx and ny must be >= 1")
    derived = model.derive(p, w)
    cs = _exact(cfg)
    xs = np.linspace(x0, x1, g["nx"])
    ys = np.linspace(y0, y1, g["ny"])
    L_max = 0
    for x in xs:
        for y in ys:
            pt = fields.nearest_frame(x, y, d)
            if p.radius_a <= pt.R < d:
                L_max = max(L_max, fields.regular_order_count(pt.R, d, derived.k_r * pt.R))
    sums = lattice.schlomilch_table(derived.Delta, w.psi_i, L_max + cs.n_trunc) if L_max else {}
    nan = math.nan
    rows = []
    for y in ys:
        for x in xs:
            pt = fields.nearest_frame(x, y, d, g["z"])
            if pt.R < p.radius_a or pt.R >= 0.95 * d:
                # inside a rod or outside the re-expansion range
                rows.append([x, y, nan, nan, nan, nan])
                continue
            fs = fields.exterior_field(pt, cs, w, p, sums=sums, derived=derived)
            rows.append([x, y, fs.E_z.real, fs.E_z.imag, fs.H_z.real, fs.H_z.imag])
    return Table(["x", "y", "re_E_z", "im_E_z", "re_H_z", "im_H_z"], rows)


def selftest_checks(cfg):
    """Invariant suite at the configured parameters: list of (name, ok, detail)."""
    p, w = cfg.params, cfg.wave
    derived = model.derive(p, w)
    D, psi, s = derived.Delta, w.psi_i, w.sin_psi
    out = []

    def check(name, value, limit):
        out.append((name, bool(value < limit), f"{value:.3e} < {limit:.0e}"))

    x = derived.k_r * p.radius_a
    wr = max(abs(sf.bessel_j(n, x) * sf.bessel_y_prime(n, x) - sf.bessel_j_prime(n, x) * sf.bessel_y(n, x)
                 - 2 / (math.pi * x)) * x for n in range(0, 21))
    check("wronskian", wr, 1e-9)
    dev = max(abs(lattice.elementary(n, D, psi) - lattice.direct_sum(n, D, psi, 1e-11))
              / max(abs(lattice.direct_sum(n, D, psi, 1e-11)), 1.0) for n in range(0, 5))
    check("lattice sums: elementary vs direct", dev, 1e-6)
    sym = max(abs(lattice.direct_sum_s(-n, D, s, 1e-11) - lattice.direct_sum_s(n, D, -s, 1e-11))
              for n in (1, 2, 3))
    check("lattice sums: order reflection", sym, 1e-9)
    N = cfg.solver["n_trunc"]
    sums = lattice.schlomilch_table(D, psi, 2 * max(N, 12))
    system = exact.assemble(p, w, derived, sums, N)
    cs = exact.solve_direct(system)
    check("exact residual", cs.residual, 1e-10)
    try:
        neu = exact.solve_neumann(system, tol=1e-13)
        check("direct vs neumann", exact.max_relative_change(neu, cs), 1e-8)
    except GratingError as exc:
        out.append(("direct vs neumann", True, f"skipped: {exc}"))
    c8 = exact.solve_direct(exact.assemble(p, w, derived, sums, 8))
    c12 = exact.solve_direct(exact.assemble(p, w, derived, sums, 12))
    check("truncation N=8 vs N=12", exact.max_relative_change(c8, c12), 1e-8)
    zero = {k: 0j for k in range(-2 * N, 2 * N + 1)}
    iso = exact.solve_direct(exact.assemble(p, w, derived, zero, N))
    blocks = exact.isolated_blocks(system)
    iso_err = 0.0
    for k, n in enumerate(system.orders):
        rhs = np.array([-system.b_mu[k] * system.c[k] * system.E[k] * system.xi0,
                        system.a_eps[k] * system.E[k]])
        sol = np.linalg.solve(blocks[k], rhs)
        iso_err = max(iso_err, abs(sol[0] - iso.A[n]), abs(sol[1] / system.xi0 - iso.A_H[n]) * system.xi0)
    check("isolated-rod limit", iso_err / max(abs(v) for v in iso.A.values()), 1e-12)
    d = p.spacing_d
    pts = [(0.1 * d, 0.5 * d), (-0.3 * d, 0.45 * d), (0.25 * d, 0.6 * d)]
    fs_sums = lattice.schlomilch_table(D, psi, 120 + N)
    dual = 0.0
    for xx, yy in pts:
        e0 = fields.exterior_field(fields.frame_point(xx, yy, 0, d), cs, w, p, fs_sums, derived=derived).E_z
        e1 = fields.exterior_field(fields.frame_point(xx, yy, 1, d), cs, w, p, fs_sums, derived=derived).E_z
        dual = max(dual, abs(e0 - e1) / abs(e0))
    check("field: dual-frame consistency", dual, 1e-6)
    e_a = fields.exterior_field(fields.frame_point(0.1 * d, -0.45 * d, 0, d), cs, w, p, fs_sums, derived=derived).E_z
    e_b = fields.exterior_field(fields.frame_point(0.1 * d, 0.55 * d, 0, d), cs, w, p, fs_sums, derived=derived).E_z
    check("field: quasi-periodicity", abs(e_b / e_a - np.exp(1j * derived.k_r * d * s)), 1e-9)
    if p.a_over_d < 0.5 and D * (1 + abs(s)) < 1:
        _, asy = _asymptotic(cfg)
        err = max(abs(asy.A[k] - cs.A[k]) / abs(cs.A[k]) for k in (1, -1))
        check("asymptotic vs exact A_{+-1}", err, 0.1)
    return out


def cmd_selftest(cfg):
    checks = selftest_checks(cfg)
    rows = [[name, "PASS" if ok else "FAIL", detail] for name, ok, detail in checks]
    return Table(["property", "status", "detail"], rows)


COMMANDS = {
    "sums": cmd_sums,
    "coeffs-exact": cmd_coeffs_exact,
    "coeffs-asymptotic": cmd_coeffs_asymptotic,
    "compare": cmd_compare,
    "field-grid": cmd_field_grid,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# driver


def _render(table, subcommand, fmt_name):
    return table.to_json(subcommand) if fmt_name == "json" else table.to_csv()


def run_one(subcommand, config_path, fmt_name=None, from_json=None):
    """Run one subcommand; returns (exit_code, text, message, configured_path)."""
    cfg = None
    try:
        if from_json is not None:
            table = compare_from_json(from_json)
            fmt_name = fmt_name or "csv"
        else:
            cfg = load_config(config_path)
            fmt_name = fmt_name or cfg.output["format"]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                table = COMMANDS[subcommand](cfg)
    except ConfigError as exc:
        return 1, "", f"config error: {exc}", None
    except GratingError as exc:
        return 2, "", f"{type(exc).__name__}: {exc}", None
    text = _render(table, subcommand, fmt_name)
    code = 0
    if subcommand == "selftest" and any(r[1] != "PASS" for r in table.rows):
        code = 2
    return code, text, "", (cfg.output["path"] or None) if cfg else None


def _sweep_target(out, config_path, subcommand, fmt_name):
    stem = os.path.splitext(os.path.basename(config_path))[0]
    return os.path.join(out, f"{stem}.{subcommand}.{fmt_name}")


def _worker(args):
    subcommand, path, fmt_name = args
    return run_one(subcommand, path, fmt_name)


def build_parser():
    ap = argparse.ArgumentParser(prog="cylgrating", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", nargs="+", metavar="PATH",
                    help="configuration file(s); several files run as a sweep")
    ap.add_argument("--out", metavar="PATH",
                    help="output file (single config) or directory (sweep)")
    ap.add_argument("--format", choices=("csv", "json"), dest="fmt")
    ap.add_argument("--jobs", type=int, default=1, metavar="K")
    ap.add_argument("--from-json", metavar="PATH",
                    help="compare: rebuild the error table from a JSON comparison file")
    return ap


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.from_json and args.subcommand != "compare":
        print("config error: --from-json applies only to compare", file=sys.stderr)
        return 1
    configs = args.config or [None]
    if args.from_json or len(configs) == 1:
        code, text, msg, cfg_path = run_one(args.subcommand, configs[0], args.fmt, args.from_json)
        if msg:
            print(msg, file=sys.stderr)
        if text:
            target = args.out or cfg_path
            if target:
                _write(target, text)
            else:
                sys.stdout.write(text)
        return code

    if not args.out:
        print("config error: a sweep over several configs needs --out DIRECTORY", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    jobs = [(args.subcommand, c, args.fmt) for c in configs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]
    worst = 0
    for path, (code, text, msg, _) in zip(configs, results):
        if msg:
            print(f"{path}: {msg}", file=sys.stderr)
        if text:
            fmt_name = args.fmt or ("json" if text.lstrip().startswith("{") else "csv")
            _write(_sweep_target(args.out, path, args.subcommand, fmt_name), text)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
