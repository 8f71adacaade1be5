"""CSV, JSON and SVG emission.

Floats are written with 17 significant digits, which round-trips every
double exactly.  Nothing time- or host-dependent is written, so equal inputs
give byte-identical files.
"""

import json
import math
import os

import numpy as np

from . import __version__

BRANCH_HEADER = "lambda,arclength,mass_u,mass_v,rho,residual_inf,pohozaev_rel"


def fmt(x):
    """17 significant digits; JSON spellings for non-finite values."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


# -- JSON --------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _encode(obj, indent, level):
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(x), (int, float)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_json(record, provenance=None, indent=2):
    """Sorted keys, 17-digit floats, trailing newline.

    With ``provenance`` the document is {"provenance": ..., "record": ...}
    so the header comes first.
    """
    if provenance is not None:
        return "{\n" + " " * indent + '"provenance": ' + _encode(provenance, indent, 1) + ",\n" + \
            " " * indent + '"record": ' + _encode(record, indent, 1) + "\n}\n"
    return _encode(record, indent, 0) + "\n"


# -- CSV ---------------------------------------------------------------------


def _cell(x):
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return fmt(x)


def emit_csv(header, rows):
    lines = [",".join(header)]
    lines += [",".join(_cell(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def read_csv(text):
    """(header, rows of floats) from emitted CSV, skipping '#' lines."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return [], []
    header = lines[0].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    return header, rows


def emit_branch_csv(branch):
    rows = []
    for p in branch.points:
        d = p.state.diagnostics
        rows.append(
            (p.lam, p.arclength, d["mass_u"], d["mass_v"], d["rho"], d["residual_inf"],
             d["pohozaev_rel"])
        )
    return emit_csv(BRANCH_HEADER.split(","), rows)


def emit_profile_csv(grid, u, v=None, name="value"):
    if v is None:
        return emit_csv(["r", name], zip(grid.nodes, u))
    return emit_csv(["r", "u", "v"], zip(grid.nodes, u, v))


# -- provenance --------------------------------------------------------------


def provenance(config, command, args=None):
    return {
        "tool": "coupled_nls",
        "version": __version__,
        "command": command,
        "config_sha256": config.sha256(),
        "seed": config.seed,
        "arguments": dict(sorted((args or {}).items())),
    }


def csv_preamble(prov):
    lines = [f"# {k}: {json.dumps(v, sort_keys=True) if isinstance(v, dict) else v}"
             for k, v in prov.items()]
    return "\n".join(lines) + "\n"


def svg_preamble(prov):
    body = "; ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in prov.items())
    return f"<!-- {body.replace('--', '- -')} -->\n"


def with_provenance(kind, text, prov):
    if kind == "csv":
        return csv_preamble(prov) + text
    if kind == "svg":
        return svg_preamble(prov) + text
    raise ValueError(kind)


def write_text(path, text):
    """Write with a trailing newline; OSError carries the path."""
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", path) from exc
    return path


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=20, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _g(x):
    return format(float(x), ".6g")


class _LogAxes:
    def __init__(self, xr, yr):
        self.x0, self.x1 = (math.log10(v) for v in xr)
        self.y0, self.y1 = (math.log10(v) for v in yr)
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1, self.y1 + 1
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + self.w * (math.log10(x) - self.x0) / (self.x1 - self.x0)

    def py(self, y):
        return MARGIN["top"] + self.h * (1 - (math.log10(y) - self.y0) / (self.y1 - self.y0))

    def frame(self, xlabel, ylabel):
        out = [
            f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{self.w}" height="{self.h}" '
            'fill="none" stroke="black"/>'
        ]
        for d in range(math.ceil(self.x0), math.floor(self.x1) + 1):
            x = self.px(10.0**d)
            out.append(f'<line x1="{_g(x)}" y1="{MARGIN["top"] + self.h}" x2="{_g(x)}" '
                       f'y2="{MARGIN["top"] + self.h + 5}" stroke="black"/>')
            out.append(f'<text x="{_g(x)}" y="{MARGIN["top"] + self.h + 18}" '
                       f'text-anchor="middle" font-size="11">1e{d}</text>')
        for d in range(math.ceil(self.y0), math.floor(self.y1) + 1):
            y = self.py(10.0**d)
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{_g(y)}" x2="{MARGIN["left"]}" '
                       f'y2="{_g(y)}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{_g(y + 4)}" text-anchor="end" '
                       f'font-size="11">1e{d}</text>')
        out.append(f'<text x="{MARGIN["left"] + self.w / 2:g}" y="{HEIGHT - 10}" '
                   f'text-anchor="middle" font-size="13">{xlabel}</text>')
        out.append(f'<text x="16" y="{MARGIN["top"] + self.h / 2:g}" text-anchor="middle" '
                   f'font-size="13" transform="rotate(-90 16 {MARGIN["top"] + self.h / 2:g})">'
                   f'{ylabel}</text>')
        return out

    def polyline(self, xs, ys, color, dash=None, label=None):
        pts = " ".join(f"{_g(self.px(x))},{_g(self.py(y))}" for x, y in zip(xs, ys) if y > 0)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        title = f"<title>{label}</title>" if label else ""
        return f'<polyline points="{pts}" fill="none" stroke="{color}"{extra}>{title}</polyline>'


def _svg(body):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return head + "\n" + "\n".join(body) + "\n</svg>\n"


def _span(vals, pad=1.15):
    vals = [v for v in vals if v > 0 and math.isfinite(v)]
    return min(vals) / pad, max(vals) * pad


def _legend(entries):
    out = []
    for i, (label, color, dash) in enumerate(entries):
        y = MARGIN["top"] + 15 + 16 * i
        x = WIDTH - MARGIN["right"] - 150
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 24}" y2="{y}" stroke="{color}"{extra}/>')
        out.append(f'<text x="{x + 30}" y="{y + 4}" font-size="11">{label}</text>')
    return out


def emit_svg_curves(curve):
    """beta1, beta2 against lam on log axes, tau0 mu_i guides, lam* marker."""
    lam, b1, b2 = curve.lam, curve.beta1, curve.beta2
    g1, g2 = curve.mu1 * curve.tau0, curve.mu2 * curve.tau0
    ax = _LogAxes((lam[0], lam[-1]), _span(list(b1) + list(b2) + [g1, g2]))
    body = ax.frame("lambda", "beta")
    body.append(ax.polyline(lam, b1, COLORS[0], label="beta1"))
    body.append(ax.polyline(lam, b2, COLORS[1], label="beta2"))
    for g, c, name in ((g1, COLORS[0], "mu1 tau0"), (g2, COLORS[1], "mu2 tau0")):
        body.append(ax.polyline([lam[0], lam[-1]], [g, g], c, dash="4 3", label=name))
    x, y = ax.px(curve.lam_star), ax.py(curve.beta_star)
    body.append(f'<circle cx="{_g(x)}" cy="{_g(y)}" r="4" fill="black">'
                f'<title>lambda* = {_g(curve.lam_star)}</title></circle>')
    body.append(f'<text x="{_g(x + 6)}" y="{_g(y - 6)}" font-size="11">'
                f'lambda* = {_g(curve.lam_star)}</text>')
    body += _legend([("beta1", COLORS[0], None), ("beta2", COLORS[1], None),
                     ("mu_i tau0", "black", "4 3")])
    return _svg(body)


def emit_svg_ratio(profile, label="rho"):
    """rho against lam on log axes from a ratio profile [(lam, rho)]."""
    if not profile:
        return _svg(['<text x="20" y="40">empty profile</text>'])
    lam = [p[0] for p in profile]
    rho = [p[1] for p in profile]
    lo, hi = _span(lam, 1.05)
    ax = _LogAxes((lo, hi), _span(rho + [1.0]))
    body = ax.frame("lambda", label)
    body.append(ax.polyline([lo, hi], [1.0, 1.0], "gray", dash="2 3", label="rho = 1"))
    body.append(ax.polyline(lam, rho, COLORS[0], label=label))
    return _svg(body)


VERDICT_COLORS = {
    "solution-found": "#2ca02c",
    "no-solution-evidence": "#d62728",
    "solver-inconclusive": "#bbbbbb",
}


def emit_svg_regions(cells):
    """One colored box per cell along a log axis of the cell coordinate."""
    if not cells:
        return _svg(['<text x="20" y="40">no cells</text>'])
    coord = cells[0].coordinate
    n = len(cells)
    w = (WIDTH - MARGIN["left"] - MARGIN["right"]) / n
    body = []
    for i, c in enumerate(cells):
        x = MARGIN["left"] + i * w
        body.append(f'<rect x="{_g(x)}" y="60" width="{_g(w)}" height="80" '
                    f'fill="{VERDICT_COLORS[c.verdict]}" stroke="white">'
                    f'<title>{coord} = {_g(c.value)}: {c.verdict}</title></rect>')
    for i in sorted({0, n // 2, n - 1}):
        x = MARGIN["left"] + (i + 0.5) * w
        body.append(f'<text x="{_g(x)}" y="160" text-anchor="middle" font-size="11">'
                    f'{_g(cells[i].value)}</text>')
    body.append(f'<text x="{WIDTH / 2:g}" y="185" text-anchor="middle" font-size="13">'
                f'{coord} (log-spaced cells)</text>')
    body.append(f'<text x="{MARGIN["left"]}" y="40" font-size="13">mu1 = {_g(cells[0].mu1)}, '
                f'mu2 = {_g(cells[0].mu2)}, beta = {_g(cells[0].beta)}</text>')
    for i, (name, color) in enumerate(VERDICT_COLORS.items()):
        y = 215 + 18 * i
        body.append(f'<rect x="{MARGIN["left"]}" y="{y - 10}" width="12" height="12" '
                    f'fill="{color}"/>')
        body.append(f'<text x="{MARGIN["left"] + 18}" y="{y}" font-size="11">{name}</text>')
    return _svg(body)
