"""Batch experiment runner: simulate every (state, eta) cell and tabulate.

Each cell draws one heterodyne sample with a seed derived from
``SeedSequence([seed, state_index, eta_index])``; every analysis of that
cell reuses it.  Direct photodetection (for ``compare_direct``) uses the
stream ``[seed, state_index, eta_index, 1]``.
"""

from __future__ import annotations

import csv
import datetime
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, Expectation
from .detector import DetectorConfig, sample_direct, sample_heterodyne
from .estimators import (_plug_in, estimate_mean_photon, estimate_normal_moment,
                         estimate_quadrature, estimate_shift_operator, phase_histogram)
from .reconstruction import choose_cutoff, reconstruct
from .states import build_state

COLUMNS = ("state", "label", "eta", "value_re", "value_im", "ci_re", "ci_im")


@dataclass(frozen=True)
class Row:
    state: str
    label: str
    eta: float
    value_re: float
    value_im: float = 0.0
    ci_re: float = 0.0
    ci_im: float = 0.0

    @property
    def key(self):
        return (self.state, self.eta, self.label)


@dataclass
class ResultTable:
    """Rows of one analysis plus a metadata header."""

    analysis: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    matrices: list = field(default_factory=list)  # (state, eta, ReconstructionResult)

    def sorted_rows(self):
        order = {lbl: i for i, lbl in enumerate(dict.fromkeys(r.label for r in self.rows))}
        return sorted(self.rows, key=lambda r: (r.state, r.eta, order[r.label]))

    def select(self, state=None, label=None, eta=None):
        return [r for r in self.rows if (state is None or r.state == state)
                and (label is None or r.label == label) and (eta is None or r.eta == eta)]

    def to_csv(self, reproducible=True) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        if not reproducible:
            stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
            buf.write(f"# generated: {stamp}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.sorted_rows():
            writer.writerow([r.state, r.label, _fmt(r.eta), _fmt(r.value_re), _fmt(r.value_im),
                             _fmt(r.ci_re), _fmt(r.ci_im)])
        return buf.getvalue()


@dataclass(frozen=True)
class CheckResult:
    expectation: Expectation
    row: Row | None
    passed: bool
    detail: str


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def cell_seed(seed: int, i_state: int, i_eta: int, stream: int = 0) -> int:
    entropy = [seed, i_state, i_eta] + ([stream] if stream else [])
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def run(config: ExperimentConfig) -> dict:
    """Run every analysis on every (state, eta) cell; returns ``{analysis: ResultTable}``."""
    tables = {a.kind: ResultTable(a.kind, metadata=_metadata(config, a)) for a in config.analyses}
    for i_state, (label, spec) in enumerate(config.states):
        rho = build_state(spec)
        for i_eta, eta in enumerate(config.eta_list):
            seed = cell_seed(config.seed, i_state, i_eta)
            samples = sample_heterodyne(rho, DetectorConfig(eta, config.n_samples, seed))
            for analysis in config.analyses:
                table = tables[analysis.kind]
                _ANALYSES[analysis.kind](table, analysis, label, eta, samples, config,
                                         rho=rho, i_state=i_state, i_eta=i_eta)
    return tables


def _metadata(config, analysis):
    meta = {"tool": f"heterodyne {__version__}", "analysis": analysis.kind,
            "seed": config.seed, "n_samples": config.n_samples, "n_blocks": config.n_blocks,
            "eta": " ".join(_fmt(e) for e in config.eta_list)}
    for key, value in analysis.options.items():
        if value is not None:
            meta[key] = value if not isinstance(value, tuple) else " ".join(map(str, value))
    for label, spec in config.states:
        meta[f"state {label}"] = spec.describe()
    return meta


def _moments(table, analysis, state, eta, samples, config, **_):
    for n, d in analysis.options["orders"]:
        est = estimate_normal_moment(samples, n, d)
        table.rows.append(Row(state, f"moment({n},{d})", eta, est.value.real, est.value.imag,
                              est.half_width_re, est.half_width_im))


def _quadratures(table, analysis, state, eta, samples, config, **_):
    for phi in analysis.options["angles"]:
        mean, var = estimate_quadrature(samples, phi, config.n_blocks)
        table.rows.append(Row(state, f"mean({phi:.6g})", eta, mean.real, 0.0, mean.half_width))
        table.rows.append(Row(state, f"variance({phi:.6g})", eta, var.real, 0.0, var.half_width))


def _phase(table, analysis, state, eta, samples, config, **_):
    hist = phase_histogram(samples, analysis.options["bins"])
    for b, (center, mass, hw) in enumerate(zip(hist.centers, hist.bin_masses, hist.half_widths)):
        table.rows.append(Row(state, f"bin{b:03d}({center:+.6f})", eta, mass, 0.0, hw))
    smooth = hist.smoothed(3)
    peaks = hist.local_maxima(3)
    width = 2 * np.pi / hist.n_bins
    table.rows.append(Row(state, "n_peaks", eta, float(peaks.size)))
    table.rows.append(Row(state, "peak_height", eta, float(smooth.max()) / width))
    sep = math.nan
    if peaks.size == 2:
        sep = float(abs(hist.centers[peaks[1]] - hist.centers[peaks[0]]))
        sep = min(sep, 2 * np.pi - sep)
    table.rows.append(Row(state, "peak_separation", eta, sep))
    # circular harmonics E[exp(i m phi)]: m=1 vanishes for two peaks a half-turn
    # apart, arg of m=2 gives their common axis
    alpha = samples.outcomes
    phase = np.where(np.abs(alpha) < 1e-12, 0.0, np.angle(alpha))
    for m in (1, 2):
        h = _plug_in(np.exp(1j * m * phase))
        table.rows.append(Row(state, f"harmonic({m})", eta, h.value.real, h.value.imag,
                              h.half_width_re, h.half_width_im))
        if m == 2:
            table.rows.append(Row(state, "axis", eta, float(np.angle(h.value) / 2 % np.pi)))


def _reconstruct(table, analysis, state, eta, samples, config, **_):
    cutoff = analysis.options["cutoff"]
    unstable = False
    if cutoff is None:
        cutoff, unstable = choose_cutoff(samples, analysis.options["n_max"], config.n_blocks)
    result = reconstruct(samples, cutoff, config.n_blocks)
    for m in range(result.dim):
        for n in range(result.dim):
            est = result.estimate(m, n)
            table.rows.append(Row(state, f"rho[{m},{n}]", eta, est.value.real, est.value.imag,
                                  est.half_width_re, est.half_width_im))
    table.rows.append(Row(state, "trace", eta, result.trace_estimate.real, 0.0,
                          result.trace_estimate.half_width))
    table.rows.append(Row(state, "cutoff", eta, float(cutoff)))
    table.rows.append(Row(state, "unstable", eta, float(unstable)))
    table.matrices.append((state, eta, result))


def _compare_direct(table, analysis, state, eta, samples, config, *, rho, i_state, i_eta):
    het = estimate_mean_photon(samples)
    counts = sample_direct(rho, DetectorConfig(eta, config.n_samples,
                                               cell_seed(config.seed, i_state, i_eta, 1)))
    direct = _plug_in(counts.counts / eta)
    table.rows.append(Row(state, "mean_heterodyne", eta, het.real, 0.0, het.half_width))
    table.rows.append(Row(state, "mean_direct", eta, direct.real, 0.0, direct.half_width))
    ratio = het.half_width / direct.half_width if direct.half_width > 0 else math.inf
    table.rows.append(Row(state, "noise_db", eta, 20 * math.log10(ratio) if ratio > 0 else -math.inf))


def _shift_operator(table, analysis, state, eta, samples, config, **_):
    for phi in analysis.options["angles"]:
        est = estimate_shift_operator(samples, phi)
        table.rows.append(Row(state, f"shift({phi:.6g})", eta, est.value.real, est.value.imag,
                              est.half_width_re, est.half_width_im))


_ANALYSES = {"moments": _moments, "quadratures": _quadratures, "phase": _phase,
             "reconstruct": _reconstruct, "compare_direct": _compare_direct,
             "shift_operator": _shift_operator}


# -- rendering and files --------------------------------------------------------


def _num(x):
    return f"{x:.3f}".replace("0.", ".", 1) if abs(x) < 1 else f"{x:.3f}"


def format_cell(value: complex, hw_re: float, hw_im: float, diagonal: bool) -> str:
    """``a±b`` for diagonal cells, ``(a+ib)±(c+id)`` otherwise."""
    if diagonal:
        return f"{_num(value.real)}±{_num(hw_re)}"
    sign = "-" if value.imag < 0 else "+"
    return f"({_num(value.real)}{sign}i{_num(abs(value.imag))})±({_num(hw_re)}+i{_num(hw_im)})"


def render_matrix(result) -> str:
    """Lower triangle of a reconstruction in a fixed-width text table."""
    dim = result.dim
    cells = [[format_cell(result.elements[m, n], result.half_widths_re[m, n],
                          result.half_widths_im[m, n], m == n) if n <= m else ""
              for n in range(dim)] for m in range(dim)]
    width = max(len(c) for row in cells for c in row) + 2
    lines = ["m\\n " + "".join(f"{n:^{width}}" for n in range(dim))]
    for m, row in enumerate(cells):
        lines.append(f"{m:<4}" + "".join(f"{c:^{width}}" for c in row).rstrip())
    return "\n".join(lines) + "\n"


def matrix_csv(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("m", "n", "value_re", "value_im", "ci_re", "ci_im"))
    for m in range(result.dim):
        for n in range(result.dim):
            z = result.elements[m, n]
            writer.writerow((m, n, _fmt(z.real), _fmt(z.imag), _fmt(result.half_widths_re[m, n]),
                             _fmt(result.half_widths_im[m, n])))
    return buf.getvalue()


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def write_tables(tables: dict, out_dir, reproducible=True) -> list:
    """Write one CSV per analysis (plus matrix files for reconstructions)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind, table in tables.items():
        path = out / f"{kind}.csv"
        path.write_text(table.to_csv(reproducible))
        written.append(path)
        for state, eta, result in sorted(table.matrices, key=lambda t: (t[0], t[1])):
            stem = f"{kind}_{_slug(state)}_eta{_fmt(eta)}"
            header = f"# state {state}, eta {_fmt(eta)}, cutoff {result.cutoff}, n_samples {result.n_samples}\n"
            (out / f"{stem}_matrix.csv").write_text(header + matrix_csv(result))
            (out / f"{stem}_matrix.txt").write_text(header + render_matrix(result))
            written += [out / f"{stem}_matrix.csv", out / f"{stem}_matrix.txt"]
    return written


# -- expectations --------------------------------------------------------------


def _glob(pattern):
    return re.compile("^" + ".*".join(re.escape(p) for p in pattern.split("*")) + "$")


def _field(row, name):
    if name == "re":
        return row.value_re, row.ci_re
    if name == "im":
        return row.value_im, row.ci_im
    if name == "abs":
        return math.hypot(row.value_re, row.value_im), math.hypot(row.ci_re, row.ci_im)
    if name == "ci_re":
        return row.ci_re, 0.0
    return row.ci_im, 0.0


def check_expectations(config: ExperimentConfig, tables: dict) -> list:
    """Evaluate every ``[expect]`` rule against every matching row."""
    results = []
    for exp in config.expectations:
        table = tables.get(exp.analysis)
        state_re, label_re = _glob(exp.state), _glob(exp.label)
        rows = [r for r in (table.sorted_rows() if table else [])
                if state_re.match(r.state) and label_re.match(r.label)]
        if not rows:
            results.append(CheckResult(exp, None, False, "no matching rows"))
            continue
        for row in rows:
            value, ci = _field(row, exp.field)
            if exp.low is not None:
                ok = exp.low <= value <= exp.high
                detail = f"{value:.6g} in [{exp.low:.6g}, {exp.high:.6g}]"
            elif exp.ci_multiple is not None:
                ok = abs(value - exp.target) <= exp.ci_multiple * ci
                detail = f"|{value:.6g} - {exp.target:.6g}| <= {exp.ci_multiple:g} * {ci:.4g}"
            else:
                ok = abs(value - exp.target) <= exp.tolerance
                detail = f"|{value:.6g} - {exp.target:.6g}| <= {exp.tolerance:.6g}"
            results.append(CheckResult(exp, row, bool(ok), detail))
    return results
