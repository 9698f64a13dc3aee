"""Experiment configuration files.

The format is line-oriented ``key = value`` text with ``[section]``
headers (Python's configparser dialect restricted to ``=`` as delimiter,
``#``/``;`` comments, case-sensitive keys).  See the README for the full
grammar.  Numeric values may be arithmetic expressions over ``pi``, ``e``,
``sqrt``, ``asinh``/``arcsinh``, ``exp``, ``log``, ``sin``, ``cos`` and
complex literals such as ``0.5j``.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .states import Coherent, Mixture, Number, SqueezedCoherent, StateSpec, Superposition

ANALYSES = ("moments", "quadratures", "phase", "reconstruct", "compare_direct", "shift_operator")

_FUNCS = {"sqrt": math.sqrt, "asinh": math.asinh, "arcsinh": math.asinh, "exp": math.exp,
          "log": math.log, "sin": math.sin, "cos": math.cos}
_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


@dataclass(frozen=True)
class Analysis:
    kind: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Expectation:
    """A range check on output rows: ``analysis/state/label[/field] = rule``."""

    analysis: str
    state: str
    label: str
    field: str
    low: float | None = None
    high: float | None = None
    target: float | None = None
    tolerance: float | None = None
    ci_multiple: float | None = None
    source: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    states: tuple  # of (label, StateSpec)
    eta_list: tuple
    n_samples: int
    seed: int
    analyses: tuple
    n_blocks: int = 50
    output_path: str = "results"
    expectations: tuple = ()
    description: str = ""


def evaluate(text: str, where: str = "", line: int | None = None) -> complex:
    """Evaluate a restricted arithmetic expression."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
        return _eval(tree.body)
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError, KeyError) as exc:
        raise ConfigError(f"cannot evaluate {text.strip()!r}: {exc}", field=where, line=line) from None


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.Name):
        return _CONSTS[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval(node.operand))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def _key_lines(text):
    """Map (section, key) to 1-based line numbers."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
        elif "=" in s and section is not None:
            lines[(section, s.split("=", 1)[0].strip())] = i
    return lines


class _Reader:
    def __init__(self, text, name):
        self.name = name
        self.lines = _key_lines(text)
        self.parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                                inline_comment_prefixes=("#",),
                                                interpolation=None, default_section="__none__")
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=name)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(str(exc).splitlines()[0], line=line) from None

    def line(self, section, key=None):
        return self.lines.get((section, key))

    def fail(self, section, key, message):
        fieldname = f"{section}.{key}" if key else section
        raise ConfigError(message, field=fieldname, line=self.line(section, key))

    def get(self, section, key, default=None, required=False):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        if required:
            self.fail(section, None, f"missing required key '{key}'")
        return default

    def number(self, section, key, default=None, required=False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        return evaluate(raw, f"{section}.{key}", self.line(section, key))

    def real(self, section, key, default=None, required=False):
        value = self.number(section, key, default, required)
        if value is None:
            return None
        if isinstance(value, complex):
            if value.imag != 0:
                self.fail(section, key, "expected a real number")
            value = value.real
        return float(value)

    def integer(self, section, key, default=None, required=False):
        value = self.real(section, key, default, required)
        if value is None:
            return None
        if value != int(value):
            self.fail(section, key, f"expected an integer, got {value!r}")
        return int(value)

    def number_list(self, section, key, required=False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return None
        items = [s for s in (p.strip() for p in raw.split(",")) if s]
        return [evaluate(s, f"{section}.{key}", self.line(section, key)) for s in items]

    def check_keys(self, section, allowed):
        for key in self.parser.options(section):
            if key not in allowed:
                self.fail(section, key, f"unknown key '{key}' (allowed: {', '.join(sorted(allowed))})")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise
    return parse_config(text, path.name)


def parse_config(text: str, name: str = "<config>") -> ExperimentConfig:
    """Parse and validate experiment configuration text."""
    r = _Reader(text, name)
    sections = r.parser.sections()
    if "experiment" not in sections:
        raise ConfigError("missing [experiment] section", field="experiment")
    r.check_keys("experiment", {"eta", "n_samples", "seed", "n_blocks", "output", "description"})

    etas = r.number_list("experiment", "eta", required=True)
    if not etas:
        r.fail("experiment", "eta", "eta list is empty")
    eta_list = []
    for eta in etas:
        if isinstance(eta, complex) or not 0 < eta <= 1:
            r.fail("experiment", "eta", f"quantum efficiency {eta!r} outside (0, 1]")
        eta_list.append(float(eta))

    n_samples = r.integer("experiment", "n_samples", required=True)
    n_blocks = r.integer("experiment", "n_blocks", 50)
    if n_blocks < 2:
        r.fail("experiment", "n_blocks", "need at least 2 blocks")
    if n_samples < 2 * n_blocks:
        r.fail("experiment", "n_samples", f"need at least {2 * n_blocks} samples for {n_blocks} blocks")
    seed = r.integer("experiment", "seed", 0)
    if not 0 <= seed < 2 ** 64:
        r.fail("experiment", "seed", "seed must be an unsigned 64-bit integer")

    components = {s.split(None, 1)[1].strip(): s for s in sections
                  if s.startswith("component ") and len(s.split(None, 1)) == 2}
    states = []
    for sec in sections:
        if sec == "state" or sec.startswith("state "):
            label = sec.split(None, 1)[1].strip() if " " in sec else "state"
            states.append((label, _parse_state(r, sec, components, set())))
    if not states:
        raise ConfigError("no [state] section", field="state")
    labels = [lbl for lbl, _ in states]
    if len(set(labels)) != len(labels):
        raise ConfigError("state labels must be unique", field="state")

    analyses = []
    for sec in sections:
        if sec in ANALYSES:
            analyses.append(_parse_analysis(r, sec))
    if not analyses:
        raise ConfigError(f"no analysis requested (sections: {', '.join(ANALYSES)})", field="analysis")

    known = {"experiment", "expect"} | set(ANALYSES)
    for sec in sections:
        if sec not in known and not sec.startswith(("state", "component ")):
            r.fail(sec, None, f"unknown section [{sec}]")

    expectations = tuple(_parse_expectations(r)) if "expect" in sections else ()
    return ExperimentConfig(
        states=tuple(states), eta_list=tuple(eta_list), n_samples=n_samples, seed=seed,
        analyses=tuple(analyses), n_blocks=n_blocks,
        output_path=r.get("experiment", "output", "results"),
        expectations=expectations, description=r.get("experiment", "description", ""))


_STATE_KEYS = {
    "coherent": {"kind", "amplitude", "dim"},
    "number": {"kind", "n", "dim"},
    "squeezed": {"kind", "amplitude", "r", "squeezing_photons", "phase", "dim"},
    "superposition": {"kind", "coefficients", "dim"},
    "mixture": {"kind", "components", "dim"},
}


def _parse_state(r, sec, components, seen) -> StateSpec:
    kind = r.get(sec, "kind", required=True).strip().lower()
    if kind not in _STATE_KEYS:
        r.fail(sec, "kind", f"unknown state kind '{kind}' (allowed: {', '.join(_STATE_KEYS)})")
    r.check_keys(sec, _STATE_KEYS[kind])
    dim = r.integer(sec, "dim")
    if dim is not None and dim < 1:
        r.fail(sec, "dim", "dim must be positive")
    if kind == "coherent":
        return Coherent(complex(r.number(sec, "amplitude", required=True)), dim)
    if kind == "number":
        n = r.integer(sec, "n", required=True)
        if n < 0 or (dim is not None and n >= dim):
            r.fail(sec, "n", f"photon number {n} invalid for dim={dim}")
        return Number(n, dim)
    if kind == "squeezed":
        amplitude = complex(r.number(sec, "amplitude", 0.0))
        rr = r.real(sec, "r")
        photons = r.real(sec, "squeezing_photons")
        if (rr is None) == (photons is None):
            r.fail(sec, "r", "give exactly one of 'r' and 'squeezing_photons'")
        if photons is not None:
            if photons < 0:
                r.fail(sec, "squeezing_photons", "must be nonnegative")
            rr = math.asinh(math.sqrt(photons))
        if rr < 0:
            r.fail(sec, "r", "must be nonnegative")
        return SqueezedCoherent(amplitude, rr, r.real(sec, "phase", 0.0), dim)
    if kind == "superposition":
        coeffs = r.number_list(sec, "coefficients", required=True)
        if not coeffs or all(c == 0 for c in coeffs):
            r.fail(sec, "coefficients", "need at least one nonzero coefficient")
        if dim is not None and len(coeffs) > dim:
            r.fail(sec, "coefficients", f"{len(coeffs)} coefficients exceed dim={dim}")
        return Superposition(coeffs, dim)
    # mixture: "components = 0.5 vac, 0.5 two" referring to [component vac] ...
    raw = r.get(sec, "components", required=True)
    parts = []
    for item in (p.strip() for p in raw.split(",")):
        bits = item.rsplit(None, 1)
        if len(bits) != 2:
            r.fail(sec, "components", f"expected '<weight> <component>', got '{item}'")
        weight = evaluate(bits[0], f"{sec}.components", r.line(sec, "components"))
        name = bits[1]
        if name not in components:
            r.fail(sec, "components", f"no [component {name}] section")
        if name in seen:
            r.fail(sec, "components", f"component '{name}' refers to itself")
        if isinstance(weight, complex) or weight < 0:
            r.fail(sec, "components", f"weight {weight!r} must be a nonnegative real")
        parts.append((float(weight), _parse_state(r, components[name], components, seen | {name})))
    total = sum(w for w, _ in parts)
    if abs(total - 1) > 1e-12:
        r.fail(sec, "components", f"weights sum to {total!r}, expected 1")
    return Mixture(parts, dim)


def _parse_analysis(r, sec) -> Analysis:
    if sec == "moments":
        r.check_keys(sec, {"orders"})
        raw = r.get(sec, "orders", required=True)
        orders = []
        for item in (p.strip() for p in raw.split(",") if p.strip()):
            m = re.fullmatch(r"(\d+)\s*:\s*(\d+)", item)
            if not m:
                r.fail(sec, "orders", f"expected 'n:d' pairs, got '{item}'")
            orders.append((int(m.group(1)), int(m.group(2))))
        if not orders:
            r.fail(sec, "orders", "no moment orders given")
        return Analysis(sec, {"orders": tuple(orders)})
    if sec in ("quadratures", "shift_operator"):
        r.check_keys(sec, {"angles"})
        angles = r.number_list(sec, "angles", required=True)
        if not angles or any(isinstance(a, complex) for a in angles):
            r.fail(sec, "angles", "need a list of real angles")
        return Analysis(sec, {"angles": tuple(float(a) for a in angles)})
    if sec == "phase":
        r.check_keys(sec, {"bins"})
        bins = r.integer(sec, "bins", 64)
        if bins < 2:
            r.fail(sec, "bins", "need at least 2 bins")
        return Analysis(sec, {"bins": bins})
    if sec == "reconstruct":
        r.check_keys(sec, {"cutoff", "n_max"})
        cutoff = r.integer(sec, "cutoff")
        n_max = r.integer(sec, "n_max")
        if (cutoff is None) == (n_max is None):
            r.fail(sec, None, "give exactly one of 'cutoff' and 'n_max'")
        limit = cutoff if cutoff is not None else n_max
        if not 0 <= limit <= 20:
            r.fail(sec, "cutoff" if cutoff is not None else "n_max", "must lie in [0, 20]")
        if n_max is not None and n_max < 2:
            r.fail(sec, "n_max", "must be at least 2")
        return Analysis(sec, {"cutoff": cutoff, "n_max": n_max})
    r.check_keys(sec, set())
    return Analysis(sec, {})


_PLUSMINUS = re.compile(r"^(?P<target>.+?)\s*\+-\s*(?P<tol>.+?)\s*$")
_FIELDS = ("re", "im", "abs", "ci_re", "ci_im")


def _parse_expectations(r):
    for key in r.parser.options("expect"):
        raw = r.parser.get("expect", key)
        line = r.line("expect", key)
        parts = key.split("/")
        if len(parts) not in (3, 4) or parts[0] not in ANALYSES:
            raise ConfigError(f"expectation key '{key}' must be analysis/state/label[/field]",
                              field=f"expect.{key}", line=line)
        fld = parts[3] if len(parts) == 4 else "re"
        if fld not in _FIELDS:
            raise ConfigError(f"unknown field '{fld}' (allowed: {', '.join(_FIELDS)})",
                              field=f"expect.{key}", line=line)
        where = f"expect.{key}"
        common = dict(analysis=parts[0], state=parts[1], label=parts[2], field=fld, source=f"{key} = {raw}")
        m = _PLUSMINUS.match(raw)
        if m:
            target = evaluate(m.group("target"), where, line).real
            tol = m.group("tol").replace(" ", "")
            if tol.endswith("ci"):
                k = tol[:-2].rstrip("*") or "1"
                yield Expectation(**common, target=target, ci_multiple=evaluate(k, where, line).real)
            else:
                yield Expectation(**common, target=target, tolerance=evaluate(tol, where, line).real)
            continue
        if ".." in raw:
            lo, hi = raw.split("..", 1)
            yield Expectation(**common, low=evaluate(lo, where, line).real, high=evaluate(hi, where, line).real)
            continue
        raise ConfigError("expected 'low .. high' or 'target +- tol' or 'target +- k*ci'",
                          field=where, line=line)
