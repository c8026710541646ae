"""Parameter sweeps over the online protocols, their CSV tables and SVG plots.

Two sweeps are supported:

* ``p_c`` at fixed ``P_avg`` over nested subsets of the heterogeneous
  distances (the first ``K`` entries), reporting sum rate and Jain index;
* ``P_avg`` with ``P_max = 5 * P_avg`` for users all at the same distance.

Every table row is the mean over seeds of single :func:`~wpcn.protocol.run`
calls, so any row can be reproduced from its parameters alone.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import DEFAULT_DISTANCES, NetworkConfig
from .protocol import Mode, run

__all__ = [
    "PEAK_TO_AVERAGE",
    "ExperimentSpec",
    "FIG1_FIELDS",
    "FIG2_FIELDS",
    "fig1_spec",
    "fig2_spec",
    "parse_config_text",
    "load_config",
    "network_from_mapping",
    "spec_from_mapping",
    "run_fig1_experiment",
    "run_fig2_experiment",
    "read_table",
    "emit_plot",
]

PEAK_TO_AVERAGE = 5.0
FIG1_FIELDS = ["p_c", "K", "mode", "sum_rate", "jain"]
FIG2_FIELDS = ["P_avg", "p_c", "K", "mode", "sum_rate", "jain"]


@dataclass
class ExperimentSpec:
    """A sweep over ``p_c`` or ``P_avg``.

    ``K_values`` selects the user counts; for the ``p_c`` sweep user ``k`` of
    a ``K``-user network sits at ``base.distances[k]``, for the ``P_avg``
    sweep all users sit at ``base.distances[0]``.  ``fixed_p_c`` lists the
    circuit powers drawn as separate curves in the ``P_avg`` sweep.
    """

    name: str
    sweep: str
    values: Sequence[float]
    modes: Sequence = (Mode.PF, Mode.MAXSUM)
    base: NetworkConfig = field(default_factory=NetworkConfig)
    M: int = 100_000
    seeds: Sequence[int] = (1, 2, 3)
    K_values: Sequence[int] = (3, 5)
    fixed_p_c: Sequence[float] = (0.0,)
    gamma_0: Optional[float] = None

    def __post_init__(self):
        self.values = tuple(float(v) for v in self.values)
        self.modes = tuple(Mode.parse(m) for m in self.modes)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.K_values = tuple(int(k) for k in self.K_values)
        self.fixed_p_c = tuple(float(v) for v in self.fixed_p_c)
        self.validate()

    def validate(self):
        def fail(name, why):
            raise ValueError(f"invalid ExperimentSpec field: {name} ({why})")

        if self.sweep not in ("p_c", "P_avg"):
            fail("sweep", "must be 'p_c' or 'P_avg'")
        if not self.values:
            fail("values", "empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            fail("values", "not strictly increasing")
        if not all(math.isfinite(v) for v in self.values):
            fail("values", "non-finite entry")
        if not self.modes:
            fail("modes", "empty")
        if len(set(self.modes)) != len(self.modes):
            fail("modes", "duplicate entry")
        if self.M < 1:
            fail("M", "must be at least 1")
        if not self.seeds:
            fail("seeds", "empty")
        if not self.K_values or min(self.K_values) < 1:
            fail("K_values", "need positive user counts")
        if self.sweep == "p_c":
            if max(self.K_values) > self.base.K:
                fail("K_values", f"base config has only {self.base.K} distances")
            if self.values[0] < 0:
                fail("values", "negative circuit power")
        else:
            if self.values[0] <= 0:
                fail("values", "P_avg must be positive")
            if not self.fixed_p_c or min(self.fixed_p_c) < 0:
                fail("fixed_p_c", "need nonnegative circuit powers")

    def configs(self):
        """Yield ``(key, config)`` for every sweep point and curve.

        ``key`` is ``(p_c, K)`` for the ``p_c`` sweep and ``(P_avg, p_c, K)``
        otherwise.
        """
        base = self.base
        if self.sweep == "p_c":
            for K in self.K_values:
                for p_c in self.values:
                    yield (p_c, K), base.replace(distances=base.distances[:K], p_c=p_c)
        else:
            for K in self.K_values:
                for p_c in self.fixed_p_c:
                    for P_avg in self.values:
                        cfg = base.replace(
                            distances=(base.distances[0],) * K,
                            p_c=p_c,
                            P_avg=P_avg,
                            P_max=PEAK_TO_AVERAGE * P_avg,
                        )
                        yield (P_avg, p_c, K), cfg


def fig1_spec(**overrides) -> ExperimentSpec:
    """Circuit-power sweep at ``P_avg = 1`` W with 3 and 5 users."""
    kw = dict(name="fig1", sweep="p_c", values=(0.0, 1e-5, 2e-5, 5e-5),
              base=NetworkConfig(distances=DEFAULT_DISTANCES, P_avg=1.0, P_max=5.0))
    kw.update(overrides)
    return ExperimentSpec(**kw)


def fig2_spec(**overrides) -> ExperimentSpec:
    """Average-power sweep, five users at 10 m, three circuit powers."""
    kw = dict(name="fig2", sweep="P_avg", values=(0.25, 0.5, 1.0, 2.0, 4.0),
              base=NetworkConfig(distances=(10.0,) * 5), K_values=(5,),
              fixed_p_c=(0.0, 1e-5, 2e-5))
    kw.update(overrides)
    return ExperimentSpec(**kw)


# ---------------------------------------------------------------- config files

_LIST_KEYS = {"values", "modes", "seeds", "K_values", "fixed_p_c", "distances", "eta"}
_SPEC_KEYS = {"name", "sweep", "values", "modes", "M", "seeds", "K_values", "fixed_p_c", "gamma_0"}
_CONFIG_KEYS = {"distances", "eta", "p_c", "P_max", "P_avg", "N_0", "T", "alpha", "ref_loss"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Values of list-valued keys are split on commas.  Everything stays a
    string; conversion happens in :func:`spec_from_mapping`.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        if key in _LIST_KEYS:
            out[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            out[key] = value
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def _num(key, v, kind=float):
    try:
        return kind(v)
    except (TypeError, ValueError):
        raise ValueError(f"invalid value for {key}: {v!r}") from None


def network_from_mapping(mapping: dict, base: Optional[NetworkConfig] = None) -> NetworkConfig:
    """Apply the network keys of a parsed config on top of ``base``."""
    base = NetworkConfig() if base is None else base
    changes = {}
    for key in _CONFIG_KEYS & mapping.keys():
        v = mapping[key]
        changes[key] = tuple(_num(key, s) for s in v) if key in _LIST_KEYS else _num(key, v)
    return base.replace(**changes) if changes else base


def spec_from_mapping(mapping: dict, default: ExperimentSpec) -> ExperimentSpec:
    """Override the fields of ``default`` with a parsed config mapping.

    Unknown keys are rejected.  When the ``P_avg`` sweep is configured
    ``P_max`` is set by the sweep itself, so it may be omitted.
    """
    unknown = set(mapping) - _SPEC_KEYS - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    kw = dict(name=default.name, sweep=default.sweep, values=default.values,
              modes=default.modes, base=default.base, M=default.M, seeds=default.seeds,
              K_values=default.K_values, fixed_p_c=default.fixed_p_c, gamma_0=default.gamma_0)
    for key in ("values", "fixed_p_c"):
        if key in mapping:
            kw[key] = [_num(key, v) for v in mapping[key]]
    for key in ("seeds", "K_values"):
        if key in mapping:
            kw[key] = [_num(key, v, int) for v in mapping[key]]
    if "modes" in mapping:
        kw["modes"] = mapping["modes"]
    if "M" in mapping:
        kw["M"] = _num("M", mapping["M"], int)
    if "gamma_0" in mapping:
        kw["gamma_0"] = _num("gamma_0", mapping["gamma_0"])
    for key in ("name", "sweep"):
        if key in mapping:
            kw[key] = mapping[key]
    kw["base"] = network_from_mapping(mapping, default.base)
    return ExperimentSpec(**kw)


# ------------------------------------------------------------------- sweeping

def _seed_average(cfg, spec, mode):
    sums, jains = [], []
    for seed in spec.seeds:
        res = run(cfg, spec.M, seed=seed, mode=mode, gamma_0=spec.gamma_0)
        sums.append(res.sum_rate)
        jains.append(res.jain)
    return float(np.mean(sums)), float(np.mean(jains))


def _write_rows(fields, rows, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def run_fig1_experiment(spec: ExperimentSpec, out=None) -> str:
    """
    Run a circuit-power sweep and return the CSV text.

    Rows are ``p_c,K,mode,sum_rate,jain``, each averaged over
    ``spec.seeds``.  If ``out`` is given the text is also written there.
    """
    if spec.sweep != "p_c":
        raise ValueError("invalid ExperimentSpec field: sweep (expected 'p_c')")
    rows = []
    for (p_c, K), cfg in spec.configs():
        for mode in spec.modes:
            s, j = _seed_average(cfg, spec, mode)
            rows.append((p_c, K, mode.value, s, j))
    return _write_rows(FIG1_FIELDS, rows, out)


def run_fig2_experiment(spec: ExperimentSpec, out=None) -> str:
    """
    Run an average-power sweep and return the CSV text.

    Rows are ``P_avg,p_c,K,mode,sum_rate,jain`` with ``P_max = 5 P_avg``
    and every user at the same distance.
    """
    if spec.sweep != "P_avg":
        raise ValueError("invalid ExperimentSpec field: sweep (expected 'P_avg')")
    if len(set(spec.base.distances)) != 1:
        raise ValueError("invalid ExperimentSpec field: distances (must all be equal)")
    rows = []
    for (P_avg, p_c, K), cfg in spec.configs():
        for mode in spec.modes:
            s, j = _seed_average(cfg, spec, mode)
            rows.append((P_avg, p_c, K, mode.value, s, j))
    return _write_rows(FIG2_FIELDS, rows, out)


# ------------------------------------------------------------------- plotting

def read_table(source) -> list:
    """Parse CSV text (anything containing a newline) or a CSV file path.

    Numeric columns are converted; raises ``ValueError`` on an empty or
    malformed table.
    """
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        with open(source) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise ValueError("empty CSV")
    header = rows[0]
    if header not in (FIG1_FIELDS, FIG2_FIELDS):
        raise ValueError(f"unrecognised CSV header: {header}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError("CSV has no data rows")
    table = []
    for n, r in enumerate(body, 2):
        if len(r) != len(header):
            raise ValueError(f"row {n}: expected {len(header)} fields, got {len(r)}")
        rec = {}
        for key, v in zip(header, r):
            if key == "mode":
                rec[key] = Mode.parse(v).value
            elif key == "K":
                rec[key] = _num(f"row {n} K", v, int)
            else:
                val = _num(f"row {n} {key}", v)
                if not math.isfinite(val):
                    raise ValueError(f"row {n}: non-finite {key}")
                rec[key] = val
        table.append(rec)
    return table


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]
_PANEL_W, _PANEL_H, _PAD = 360, 260, 55


def _fmt(v):
    return f"{v:.3g}"


def _panel(x0, title, xlabel, ylabel, curves, xs_all):
    """SVG fragment of one panel; ``curves`` maps a label to ``(xs, ys)``."""
    ys_all = [y for _, ys in curves.values() for y in ys]
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all), max(ys_all)
    if xhi == xlo:
        xlo, xhi = xlo - 1, xhi + 1
    span = yhi - ylo
    ylo, yhi = (ylo - 0.05 * span, yhi + 0.05 * span) if span > 0 else (ylo - 0.5, yhi + 0.5)
    left, top = x0 + _PAD, _PAD / 2 + 10
    w, h = _PANEL_W - _PAD - 10, _PANEL_H - _PAD - 20

    def px(x):
        return left + (x - xlo) / (xhi - xlo) * w

    def py(y):
        return top + h - (y - ylo) / (yhi - ylo) * h

    parts = [
        f'<text x="{left + w / 2:.1f}" y="{top - 8:.1f}" text-anchor="middle">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>',
        f'<text x="{left + w / 2:.1f}" y="{top + h + 35:.1f}" text-anchor="middle">{xlabel}</text>',
        f'<text x="{x0 + 12}" y="{top + h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 {x0 + 12} {top + h / 2:.1f})">{ylabel}</text>',
    ]
    for x in sorted(set(xs_all)):
        parts.append(f'<text x="{px(x):.1f}" y="{top + h + 15:.1f}" text-anchor="middle" '
                     f'font-size="9">{_fmt(x)}</text>')
    for y in np.linspace(ylo, yhi, 5):
        parts.append(f'<text x="{left - 4}" y="{py(y) + 3:.1f}" text-anchor="end" '
                     f'font-size="9">{_fmt(y)}</text>')
    for n, (label, (xs, ys)) in enumerate(curves.items()):
        color = _COLORS[n % len(_COLORS)]
        dash = ' stroke-dasharray="5,3"' if "maxsum" in label else ""
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline class="curve" fill="none" stroke="{color}"{dash} points="{pts}">'
                     f'<title>{label}</title></polyline>')
        ly = top + 12 + 12 * n
        parts.append(f'<text x="{left + w - 4}" y="{ly}" text-anchor="end" font-size="9" '
                     f'fill="{color}">{label}</text>')
    return "\n".join(parts)


def _curves(table, xkey, ykey, group):
    curves = {}
    for rec in table:
        label = ", ".join(f"{g}={rec[g]:g}" if g != "mode" else rec[g] for g in group)
        curves.setdefault(label, ([], []))
        curves[label][0].append(rec[xkey])
        curves[label][1].append(rec[ykey])
    for label, (xs, ys) in curves.items():
        order = np.argsort(xs, kind="stable")
        curves[label] = ([xs[i] for i in order], [ys[i] for i in order])
    return curves


def emit_plot(csv_source, out_path) -> int:
    """
    Write an SVG plot of a sweep table.

    Circuit-power tables give two panels (sum rate and Jain index vs
    ``p_c``) with one curve per ``(K, mode)``; average-power tables give one
    panel of sum rate vs ``P_avg`` with one curve per ``(p_c, mode)`` (and
    ``K`` when several are present).

    Returns
    -------
    int
        Number of curves drawn.
    """
    table = read_table(csv_source)
    if "P_avg" in table[0]:
        group = ["p_c", "mode"] if len({r["K"] for r in table}) == 1 else ["K", "p_c", "mode"]
        panels = [("sum rate vs P_avg", "P_avg (W)", "sum rate", _curves(table, "P_avg", "sum_rate", group))]
        xs_all = [r["P_avg"] for r in table]
    else:
        group = ["K", "mode"]
        panels = [
            ("sum rate vs p_c", "p_c (W)", "sum rate", _curves(table, "p_c", "sum_rate", group)),
            ("Jain index vs p_c", "p_c (W)", "Jain index", _curves(table, "p_c", "jain", group)),
        ]
        xs_all = [r["p_c"] for r in table]
    width = _PANEL_W * len(panels)
    body = [_panel(n * _PANEL_W, *p, xs_all) for n, p in enumerate(panels)]
    svg = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{_PANEL_H}" '
           f'font-family="sans-serif" font-size="11">\n'
           f'<rect width="100%" height="100%" fill="white"/>\n' + "\n".join(body) + "\n</svg>\n")
    with open(out_path, "w") as fh:
        fh.write(svg)
    return sum(len(p[3]) for p in panels)
