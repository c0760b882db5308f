"""Command-line entry point: ``siegert <subcommand> [options]``.

Tables are written as CSV (or aligned text) with one header row and every
number in positional notation with 15 significant digits, so equal inputs
give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import figures
from .expansion import ExpansionError, reconstruct, transmission_product, transmission_sum
from .poles import PoleSearchError, Rect, collect_poles, find_poles
from .potentials import PotentialError, eval_number, parse_potential
from .profiles import (ProfileError, ResonanceDescriptor, breit_wigner, single_resonance_profile,
                       two_antibound_profile)
from .scattering import ConvergenceError, Method, transmission_exact
from .tracking import TrackingError, detect_events, trace

DEFAULTS = {
    "transmission": {"potential": "fig1", "emin": 0.05, "emax": 30.0, "npoints": 600},
    "poles": {"potential": "fig1", "k_max": 10.0},
    "reconstruct": {"potential": "fig1", "emin": 0.5, "emax": 30.0, "npoints": 200},
    "profile": {"emin": 1e-4, "emax": 1.0, "npoints": 400},
    "trace": {"potential": "fig3a", "param": "gamma", "start": 0.875, "stop": 0.89, "step": 0.001},
    "fig1": {"emax": 30.0, "npoints": 601},
    "fig2": {"npoints": 400},
    "fig3": {"npoints": 400},
}
COMMON = {"n_slices": 4096, "tail_tol": 1e-12, "k_max": None, "region": None,
          "output": "-", "format": "csv", "method": "exact", "json": None, "outdir": ".",
          "pole": None, "axis_poles": None, "bw": False, "exact": False, "seed": None,
          "potential": None, "emin": None, "emax": None, "npoints": None}


METHOD_FLAGS = {"exact": Method.EXACT, "sum": Method.SUM, "product": Method.PRODUCT}


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------- formatting

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return np.format_float_positional(x, precision=15, unique=False, fractional=False, trim="-")


def render(header, rows, style="csv", comments=()) -> str:
    cells = [[fmt(v) for v in r] for r in rows]
    lines = []
    if style == "csv":
        lines.append(",".join(header))
        lines += [",".join(r) for r in cells]
    else:
        widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines += [f"# {c}" for c in comments]
    return "\n".join(lines) + "\n"


def emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------- config

def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}: malformed line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key, value):
    if not isinstance(value, str):
        return value
    if key in ("n_slices", "npoints"):
        return int(value)
    if key in ("emin", "emax", "tail_tol", "k_max", "start", "stop", "step"):
        return eval_number(value)
    if key in ("bw", "exact"):
        return value.lower() in ("1", "true", "yes", "on")
    return value


def resolve(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        for k, v in read_config(args.config).items():
            if k not in cfg:
                raise CliError(f"unknown config key {k!r}")
            cfg[k] = _coerce(k, v)
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        if v is False and k in ("bw", "exact"):
            continue
        cfg[k] = v
    if cfg["method"] not in METHOD_FLAGS:
        raise CliError(f"method must be one of {', '.join(METHOD_FLAGS)}")
    if cfg.get("emin") is not None and not cfg["emin"] > 0:
        raise CliError("E_min must be positive")
    if cfg.get("npoints") is not None and cfg["npoints"] < 2:
        raise CliError("n_points must be at least 2")
    if cfg.get("emin") is not None and cfg.get("emax") is not None and cfg["emax"] <= cfg["emin"]:
        raise CliError("E_max must exceed E_min")
    return cfg


def parse_complex(text: str) -> complex:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise CliError(f"expected 're,im', got {text!r}")
    return complex(eval_number(parts[0]), eval_number(parts[1]))


def parse_region(text: str) -> Rect:
    parts = [eval_number(s) for s in text.split(",")]
    if len(parts) != 4:
        raise CliError("region needs re_min,re_max,im_min,im_max")
    return Rect(*parts)


def energies(cfg):
    return np.linspace(cfg["emin"], cfg["emax"], cfg["npoints"])


def potential(cfg):
    if cfg.get("potential") is None:
        raise CliError("--potential is required")
    return parse_potential(str(cfg["potential"]))


# ---------------------------------------------------------------- commands

def cmd_transmission(cfg):
    p, E = potential(cfg), energies(cfg)
    method = METHOD_FLAGS[cfg["method"]]
    comments = [f"potential {p.describe()}"]
    if method is Method.EXACT:
        amp = transmission_exact(p, E, n_slices=cfg["n_slices"], tail_tol=cfg["tail_tol"])
        t, T = amp.t, amp.T
        comments.append(f"n_slices {amp.n_slices} residual {fmt(amp.residual)}")
    else:
        from .expansion import SHELL_RATIO, default_k_max

        k_max = cfg["k_max"] or default_k_max(E)
        ps = collect_poles(p, SHELL_RATIO * k_max, n_slices=cfg["n_slices"])
        if method is Method.SUM:
            t = transmission_sum(ps, E, k_max)
            T = np.abs(t) ** 2
        else:
            T = transmission_product(ps, E, k_max)
            t = np.full(E.shape, np.nan + 0j)
        comments.append(f"k_max {fmt(k_max)}")
    rows = [(e, tt, z.real, z.imag, method.value) for e, tt, z in zip(E, T, t)]
    return render(["E", "T", "Re_t", "Im_t", "method"], rows, cfg["format"], comments)


POLE_HEADER = ["Re_k", "Im_k", "Re_E", "Im_E", "abs_E", "Gamma", "class", "parity",
               "Re_PsiL", "Im_PsiL", "Re_PsiminusL", "Im_PsiminusL", "norm_residual"]


def pole_row(p):
    return (p.k.real, p.k.imag, p.E.real, p.E.imag, p.abs_E, abs(p.gamma),
            p.cls.value, p.parity.value, p.surf_right.real, p.surf_right.imag,
            p.surf_left.real, p.surf_left.imag, p.norm_residual)


def cmd_poles(cfg):
    p = potential(cfg)
    if cfg["region"]:
        ps = find_poles(p, parse_region(cfg["region"]), n_slices=cfg["n_slices"])
    else:
        ps = collect_poles(p, cfg["k_max"], n_slices=cfg["n_slices"])
    if cfg["json"]:
        record = {
            "potential": p.describe(),
            "L": ps.L,
            "n_slices": ps.n_slices,
            "radius": ps.radius,
            "regions": [[r.re_min, r.re_max, r.im_min, r.im_max] for r in ps.regions],
            "winding_verified": ps.winding_verified,
            "certificate": [[[b.re_min, b.re_max, b.im_min, b.im_max], n] for b, n in ps.counts],
            "poles": [dict(zip(POLE_HEADER, [v if isinstance(v, str) else float(v) for v in pole_row(q)]))
                      for q in ps.poles],
        }
        emit(json.dumps(record, indent=1) + "\n", cfg["json"])
    comments = [f"potential {p.describe()}", f"L {fmt(ps.L)}", f"winding_verified {fmt(ps.winding_verified)}"]
    return render(POLE_HEADER, [pole_row(q) for q in ps.poles], cfg["format"], comments)


def cmd_reconstruct(cfg):
    p, E = potential(cfg), energies(cfg)
    rec = reconstruct(p, E, cfg["k_max"], n_slices=cfg["n_slices"])
    T_p = rec.T_product if rec.T_product is not None else np.full(E.shape, np.nan)
    rows = zip(E, rec.T_exact, T_p, rec.T_sum, rec.estimate)
    return render(["E", "T_exact", "T_product", "T_sum", "est_truncation_error"], rows,
                  cfg["format"], [f"potential {p.describe()}", f"k_max {fmt(rec.k_max)}"])


def cmd_profile(cfg):
    E = energies(cfg)
    header, cols = ["E"], [E]
    if cfg["pole"]:
        d = ResonanceDescriptor.from_k(parse_complex(cfg["pole"]))
        header.append("T_profile")
        cols.append(single_resonance_profile(d, E))
        if cfg["bw"]:
            header.append("T_BW")
            cols.append(breit_wigner(d.epsilon, d.gamma, E))
    elif cfg["axis_poles"]:
        k1, k2 = (abs(eval_number(s)) for s in cfg["axis_poles"].split(","))
        header.append("T_profile")
        cols.append(two_antibound_profile(k1, k2, E))
    else:
        raise CliError("profile needs --pole re,im or --axis-poles k1,k2")
    if cfg["exact"]:
        header.append("T_exact")
        cols.append(transmission_exact(potential(cfg), E, n_slices=cfg["n_slices"]).T)
    return render(header, zip(*cols), cfg["format"])


def cmd_trace(cfg):
    fam = potential(cfg)
    name = cfg["param"]
    fam = fam.with_params(**{name: float(cfg["start"])})
    if cfg["seed"]:
        seeds = [parse_complex(s) for s in cfg["seed"]]
    else:
        region = parse_region(cfg["region"]) if cfg["region"] else figures.NEAR_AXIS_BOX
        ps = find_poles(fam, region, n_grid=8, n_slices=cfg["n_slices"])
        seeds = [q.k for q in ps.poles if q.k.real >= 0]
    tr = trace(fam, name, float(cfg["start"]), float(cfg["stop"]), float(cfg["step"]), seeds,
               n_slices=cfg["n_slices"])
    events = detect_events(tr)
    rows = []
    for s in tr.samples:
        for q in sorted(s.poles, key=lambda q: q.branch):
            rows.append((s.value, q.branch, q.k.real, q.k.imag, q.E.real, q.E.imag,
                         abs(q.E), q.gamma, q.cls.value))
    comments = [f"event,{e.kind.value},{fmt(e.lo)},{fmt(e.hi)},{e.branch}" for e in events]
    comments += [f"diagnostic,{d}" for d in tr.diagnostics]
    return render([name, "branch", "Re_k", "Im_k", "Re_E", "Im_E", "abs_E", "Gamma", "class"],
                  rows, cfg["format"], comments)


def _outdir(cfg) -> Path:
    out = Path(cfg["outdir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc.strerror or exc}") from exc
    return out


def cmd_fig1(cfg):
    f = figures.fig1(cfg["emax"], cfg["npoints"])
    out = _outdir(cfg)
    emit(render(["E", "T_exact"], zip(f.E, f.T), cfg["format"]), out / "fig1_transmission.csv")
    rows = [(r["n"], r["lambda"], r["E_re"], r["E_im"], r["abs_E"],
             abs(r["abs_E"] - r["lambda"]), abs(r["E_re"] - r["lambda"])) for r in f.table]
    emit(render(["n", "lambda_n", "Re_E_n", "Im_E_n", "abs_E_n", "abs_E_minus_lambda", "Re_E_minus_lambda"],
                rows, cfg["format"]), out / "fig1_poles.csv")
    return f"wrote {out / 'fig1_transmission.csv'} and {out / 'fig1_poles.csv'}\n"


def _peak_rows(fig):
    bw = fig.T_bw if fig.T_bw is not None else np.full(fig.E.shape, np.nan)
    return [(fig.gamma, e, t, pr, b) for e, t, pr, b in zip(fig.E, fig.T_exact, fig.T_profile, bw)]


def _peak_comments(fig):
    m = fig.model
    return [f"gamma {fmt(fig.gamma)} profile {m.kind} window {fmt(m.window[0])} {fmt(m.window[1])} "
            f"peak {fmt(m.peak)}"]


def cmd_fig2(cfg):
    fig = figures.fig2(cfg["npoints"])
    out = _outdir(cfg)
    emit(render(["gamma", "E", "T_exact", "T_profile", "T_BW"], _peak_rows(fig), cfg["format"],
                _peak_comments(fig)), out / "fig2.csv")
    return f"wrote {out / 'fig2.csv'}\n"


def cmd_fig3(cfg):
    figs = figures.fig3(cfg["npoints"])
    out = _outdir(cfg)
    rows, comments, poles = [], [], []
    for fig in figs:
        rows += [r[:4] for r in _peak_rows(fig)]
        comments += _peak_comments(fig)
        poles += [(fig.gamma,) + pole_row(q) for q in fig.poles.poles]
    emit(render(["gamma", "E", "T_exact", "T_profile"], rows, cfg["format"], comments),
         out / "fig3.csv")
    emit(render(["gamma"] + POLE_HEADER, poles, cfg["format"]), out / "fig3_poles.csv")
    return f"wrote {out / 'fig3.csv'} and {out / 'fig3_poles.csv'}\n"


COMMANDS = {"transmission": cmd_transmission, "poles": cmd_poles, "reconstruct": cmd_reconstruct,
            "profile": cmd_profile, "trace": cmd_trace, "fig1": cmd_fig1, "fig2": cmd_fig2,
            "fig3": cmd_fig3}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="siegert", description="S-matrix poles of 1D potentials")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, window=True):
        p.add_argument("--potential", help="preset, kind:key=value,... or a key=value file")
        p.add_argument("--config", help="key = value file overriding the defaults")
        p.add_argument("--n-slices", dest="n_slices", type=int)
        p.add_argument("--tail-tol", dest="tail_tol", type=float)
        p.add_argument("--format", choices=["csv", "text"])
        if window:
            p.add_argument("--emin", type=float)
            p.add_argument("--emax", type=float)
            p.add_argument("--npoints", type=int)

    for name in ("transmission", "poles", "reconstruct", "profile", "trace"):
        p = sub.add_parser(name)
        common(p, window=name not in ("poles", "trace"))
        p.add_argument("-o", "--output")
        if name in ("transmission", "poles", "reconstruct"):
            p.add_argument("--k-max", dest="k_max", type=float)
        if name == "transmission":
            p.add_argument("--method", choices=["exact", "sum", "product"])
        if name in ("poles", "trace"):
            p.add_argument("--region", help="re_min,re_max,im_min,im_max")
        if name == "poles":
            p.add_argument("--json", help="also write a machine-readable record here")
        if name == "profile":
            p.add_argument("--pole", help="resonance k as re,im")
            p.add_argument("--axis-poles", dest="axis_poles", help="anti-bound magnitudes k1,k2")
            p.add_argument("--bw", action="store_true", help="add the Breit-Wigner column")
            p.add_argument("--exact", action="store_true", help="add exact T for --potential")
        if name == "trace":
            p.add_argument("--param")
            p.add_argument("--start", type=float)
            p.add_argument("--stop", type=float)
            p.add_argument("--step", type=float)
            p.add_argument("--seed", action="append", help="starting pole re,im (repeatable)")
    for name in ("fig1", "fig2", "fig3"):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--outdir")
        p.add_argument("--npoints", type=int)
        p.add_argument("--format", choices=["csv", "text"])
        if name == "fig1":
            p.add_argument("--emax", type=float)
    return ap


ERRORS = (CliError, PotentialError, ProfileError, ExpansionError, PoleSearchError,
          ConvergenceError, TrackingError, ValueError, OSError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        text = COMMANDS[args.command](cfg)
        emit(text, cfg["output"])
    except ERRORS as exc:
        print(f"siegert {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
