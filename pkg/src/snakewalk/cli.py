"""Command-line front end: every subcommand writes a CSV table and a JSON sidecar.

Parameters come from built-in defaults, then an optional key=value config
file, then command-line flags. The output directory defaults to
$SNAKEWALK_OUTDIR or the current directory.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import SnakeWalkError

OUTDIR_ENV = "SNAKEWALK_OUTDIR"


def _angle(text):
    """Float, also accepting simple multiples of pi such as '3pi/2'."""
    s = str(text).strip().replace(" ", "")
    if "pi" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    coef = float(coef) if coef not in ("", "+", "-") else float(coef + "1")
    return coef * math.pi / (float(den) if den else 1.0)


COMMON = [
    ("out", str, None, "output directory (default: $SNAKEWALK_OUTDIR or .)"),
    ("name", str, None, "base name of the output files (default: the subcommand)"),
    ("format", str, "csv", "csv, json or svg (svg also writes the csv)"),
]

COMMANDS = {
    "spectra": ("k-dependent eigenvalues of the line problem and their slopes", [
        ("n", int, 8, "snake length"),
        ("K", int, 256, "number of momentum nodes"),
    ]),
    "eta": ("start-position distribution of the localised line state", [
        ("n", int, 14, "snake length (even)"),
        ("K", int, 4096, "number of momentum nodes"),
    ]),
    "evolve-line": ("position distribution of the localised line state after time t", [
        ("n", int, 14, "snake length (even)"),
        ("t", float, 400.0, "evolution time"),
        ("K", int, 0, "number of momentum nodes (0: automatic)"),
    ]),
    "tree-spectra": ("median tree band and its first two derivatives", [
        ("n", int, 8, "snake length (even)"),
        ("K", int, 256, "number of momentum nodes"),
    ]),
    "packet": ("xi packet in the tree before and after time t", [
        ("n", int, 8, "snake length (even)"),
        ("k0", _angle, 3 * math.pi / 2, "carrier momentum in (pi, 2pi); '3pi/2' accepted"),
        ("sigma", float, 0.05, "momentum width"),
        ("t", float, 100.0, "evolution time"),
        ("x0", int, 0, "initial centre"),
        ("K", int, 0, "number of momentum nodes (0: automatic)"),
    ]),
    "span": ("expected span length of the tree band vectors", [
        ("n_max", int, 20, "largest even snake length"),
        ("K", int, 256, "number of momentum nodes"),
    ]),
    "scatter": ("transmission probability and effective length of the glued part", [
        ("K", int, 1024, "number of momentum nodes on [0, 2pi)"),
    ]),
    "mu-span": ("span-class probabilities of the scattering eigenvector", [
        ("n", int, 10, "snake length (even, <= 10)"),
        ("k", _angle, 3 * math.pi / 2, "momentum; '3pi/2' accepted"),
        ("reach", int, 0, "layers on each side of the glued part (0: 2n)"),
    ]),
    "glued-run": ("the snake algorithm on an expanded glued-trees graph", [
        ("N", int, 1, "height of the glued trees"),
        ("M", int, 3, "height of the expanded graph"),
        ("n", int, 3, "snake length (>= 2N+1)"),
        ("k0", _angle, 3 * math.pi / 2, "packet carrier momentum"),
        ("sigma", float, 0.5, "packet momentum width"),
        ("x0", int, 0, "packet centre layer (0: midway in T1)"),
        ("t", float, 6.0, "evolution time"),
        ("samples", int, 200, "number of sampled snakes"),
        ("seed", int, 0, "random seed"),
        ("mode", str, "auto", "exact, column or auto"),
    ]),
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_config(path):
    """key=value lines; '#' starts a comment; [sections] are ignored."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {raw.strip()!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip().strip('"').strip("'")
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="snakewalk", description="Quantum snake walk experiments.")
    p.add_argument("--version", action="version", version=f"snakewalk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (desc, opts) in COMMANDS.items():
        sp_ = sub.add_parser(name, help=desc, description=desc)
        sp_.add_argument("--config", help="key=value file; flags override it")
        for key, typ, default, text in opts + COMMON:
            flag = "--" + key.replace("_", "-")
            sp_.add_argument(flag, dest=key, type=typ, default=None,
                             help=text if default is None else f"{text} [default: {default}]")
    return p


def resolve(args):
    """Merge defaults, config file and flags into a plain dict."""
    opts = COMMANDS[args.command][1] + COMMON
    conf = read_config(args.config) if args.config else {}
    known = {k for k, *_ in opts}
    unknown = set(conf) - known
    if unknown:
        raise ValueError(f"unknown config keys for {args.command}: {sorted(unknown)}")
    cfg = {"command": args.command}
    for key, typ, default, _ in opts:
        val = getattr(args, key)
        if val is None and key in conf:
            val = typ(conf[key])
        cfg[key] = default if val is None else val
    if cfg["out"] is None:
        cfg["out"] = os.environ.get(OUTDIR_ENV, ".")
    if cfg["name"] is None:
        cfg["name"] = args.command
    if cfg["format"] not in ("csv", "json", "svg"):
        raise ValueError("format must be csv, json or svg")
    return cfg


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(format(float(v), ".12g"))
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def write_svg(path, header, rows, width=640, height=400):
    """Line plot of every column against the first."""
    data = np.asarray(rows, dtype=float)
    x = data[:, 0]
    ys = data[:, 1:]
    fin = np.isfinite(ys)
    lo, hi = (ys[fin].min(), ys[fin].max()) if fin.any() else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1
    xl, xh = x.min(), x.max() if x.max() > x.min() else x.min() + 1
    pad = 40

    def px(v):
        return pad + (v - xl) / (xh - xl) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{pad}" y="{pad - 15}" font-size="12">{" ".join(header[1:])[:90]}</text>']
    for c in range(ys.shape[1]):
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, ys[:, c]) if np.isfinite(b))
        hue = (c * 67) % 360
        parts.append(f'<polyline fill="none" stroke="hsl({hue},70%,40%)" stroke-width="1" '
                     f'points="{pts}"/>')
    parts.append(f'<text x="{width // 2}" y="{height - 10}" font-size="12">{header[0]}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def emit(cfg, header, rows, summary=None, records=None):
    os.makedirs(cfg["out"], exist_ok=True)
    base = os.path.join(cfg["out"], cfg["name"])
    files = []
    if rows is not None:
        write_csv(base + ".csv", header, rows)
        files.append(base + ".csv")
        if cfg["format"] == "svg":
            write_svg(base + ".svg", header, rows)
            files.append(base + ".svg")
    side = {"version": __version__, "config": {k: v for k, v in cfg.items() if k != "out"},
            "columns": header, "summary": summary or {}}
    if records is not None:
        side["records"] = records
    if cfg["format"] == "json" and rows is not None:
        side["rows"] = [list(r) for r in rows]
    with open(base + ".json", "w") as fh:
        json.dump(_jsonable(side), fh, indent=1, sort_keys=True)
        fh.write("\n")
    files.append(base + ".json")
    return files


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _grid(K, fallback=None):
    from .bands import MomentumGrid
    if K:
        return MomentumGrid(K)
    return fallback


def cmd_spectra(cfg):
    from .bands import LINE, implicit_derivatives, solve_roots
    n, grid = cfg["n"], _grid(cfg["K"])
    ks = grid.nodes
    roots = solve_roots(LINE, n, ks)
    header = ["k_rad"] + [f"lambda_{l}" for l in range(n + 1)] + \
        [f"dlambda_{l}_per_rad" for l in range(n + 1)]
    lam = 4 * np.cos(roots)
    d1 = np.column_stack([implicit_derivatives(LINE, n, roots[:, l], ks, 1)[1]
                          for l in range(n + 1)])
    rows = [[k, *lam[i], *d1[i]] for i, k in enumerate(ks)]
    return header, rows, {"bands": n + 1}


def cmd_eta(cfg):
    from .dynamics import build_eta
    n, grid = cfg["n"], _grid(cfg["K"])
    eta = build_eta(n, 0, grid, window=(-3 * n, 3 * n))
    probs, ones = eta.probabilities(), eta.one_norms()
    rows = [[int(x), p, o] for x, p, o in zip(eta.xs, probs, ones)]
    table = {}
    for x, p in zip(eta.xs, probs):
        if x > 0 and x % 2:
            table[f"|x|={x}"] = float(p + probs[list(eta.xs).index(-x)])
    return ["x_layer", "probability", "one_norm"], rows, {"start_position": table,
                                                          "total": float(probs.sum())}


def cmd_evolve_line(cfg):
    from .dynamics import peak_positions, peak_prominence, wavefront_profile
    grid = _grid(cfg["K"])
    xs, prob = wavefront_profile(cfg["n"], cfg["t"], grid)
    left, right = peak_positions(xs, prob, cfg["t"])
    rows = [[int(x), p] for x, p in zip(xs, prob)]
    return ["x_layer", "probability"], rows, {
        "left_peak": left, "right_peak": right, "total": float(prob.sum()),
        "prominence": peak_prominence(xs, prob, cfg["t"])}


def cmd_tree_spectra(cfg):
    from .tree import tree_band
    band, grid = tree_band(cfg["n"]), _grid(cfg["K"])
    ks = grid.nodes
    d = band.derivatives_array(ks, 2)
    rows = [[k, d[0][i], d[1][i], d[2][i]] for i, k in enumerate(ks)]
    return ["k_rad", "lambda", "dlambda_per_rad", "d2lambda_per_rad2"], rows, \
        {"velocity_3pi_2": band.d1(3 * math.pi / 2)}


def cmd_packet(cfg):
    from .tree import (WavePacketSpec, mean_position, packet_propagation_profile, tree_band)
    spec = WavePacketSpec(cfg["x0"], cfg["k0"], cfg["sigma"])
    grid = _grid(cfg["K"])
    xs, p_end = packet_propagation_profile(spec, cfg["n"], cfg["t"], grid)
    _, p_start = packet_propagation_profile(spec, cfg["n"], 0.0, grid, window=(xs[0], xs[-1]))
    rows = [[int(x), a, b] for x, a, b in zip(xs, p_start, p_end)]
    disp = mean_position(xs, p_end) - mean_position(xs, p_start)
    return ["x_layer", "probability_t0", "probability_t"], rows, {
        "displacement": disp, "velocity": tree_band(cfg["n"]).d1(cfg["k0"]),
        "norm_t": float(p_end.sum()), "packet": spec.to_dict()}


def cmd_span(cfg):
    from .tree import band_span_profile
    grid = _grid(cfg["K"])
    ns = list(range(2, cfg["n_max"] + 1, 2))
    cols = [band_span_profile(n, grid)[1] for n in ns]
    rows = [[k, *[c[i] for c in cols]] for i, k in enumerate(grid.nodes)]
    return ["k_rad"] + [f"span_n{n}_layers" for n in ns], rows, {
        "min": {n: float(c.min()) for n, c in zip(ns, cols)},
        "max": {n: float(c.max()) for n, c in zip(ns, cols)}}


def cmd_scatter(cfg):
    from .scattering import transmission_table
    grid = _grid(cfg["K"])
    tab = transmission_table(grid.nodes)
    half = (grid.nodes > math.pi) & (grid.nodes < 2 * math.pi)
    i = int(np.argmax(np.where(half, tab[:, 1], -1)))
    j = int(np.argmin(np.where(half, tab[:, 2], np.inf)))
    return ["k_rad", "transmission_probability", "effective_length_layers"], tab.tolist(), {
        "argmax_transmission": float(tab[i, 0]), "argmin_effective_length": float(tab[j, 0])}


def cmd_mu_span(cfg):
    from .scattering import solve_scattering_vector, span_probabilities
    n, k = cfg["n"], cfg["k"]
    vec = solve_scattering_vector(n, k)
    reach = cfg["reach"] or 2 * n
    window = (-reach, reach + 1)
    rows = []
    for a in range(1, n + 1):
        for c, p in span_probabilities(vec, a, window).items():
            rows.append([c / 2, a, p])
    return ["span_centre_layer", "span_length_layers", "probability"], rows, vec.report()


def cmd_glued_run(cfg):
    from .glued import Oracle, make_glued_trees, run_algorithm
    from .tree import WavePacketSpec
    N, M = cfg["N"], cfg["M"]
    x0 = cfg["x0"] or -(M + N) // 2
    spec = WavePacketSpec(x0, cfg["k0"], cfg["sigma"])
    g = make_glued_trees(N, cfg["seed"])
    oracle = Oracle(g, seed=cfg["seed"])
    out = run_algorithm(oracle, N, M, cfg["n"], spec, cfg["t"], seed=cfg["seed"],
                        samples=cfg["samples"], mode=cfg["mode"])
    rows = [[i, int(s.bridging), s.column[0], s.column[1], len(s.path or [])]
            for i, s in enumerate(out.samples)]
    summary = out.to_dict()
    records = summary.pop("samples")
    summary["bridging_samples"] = int(sum(s.bridging for s in out.samples))
    return ["sample", "bridging", "tail_layer", "word", "path_vertices"], rows, summary, records


HANDLERS = {
    "spectra": cmd_spectra,
    "eta": cmd_eta,
    "evolve-line": cmd_evolve_line,
    "tree-spectra": cmd_tree_spectra,
    "packet": cmd_packet,
    "span": cmd_span,
    "scatter": cmd_scatter,
    "mu-span": cmd_mu_span,
    "glued-run": cmd_glued_run,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        res = HANDLERS[args.command](cfg)
        header, rows, summary = res[:3]
        records = res[3] if len(res) > 3 else None
        files = emit(cfg, header, rows, summary, records)
    except (SnakeWalkError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(record, sort_keys=True))
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
