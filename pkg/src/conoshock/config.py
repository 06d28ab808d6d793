"""Case files: sectioned key = value text read with ``configparser``.

Every key has a type and a default; the canonical emission writes the
sections in a fixed order and only the keys that differ from their defaults
(plus the gas keys that were given explicitly), so a canonical file
round-trips byte for byte.
"""

import configparser
import math
import re
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .gas import GasParameters
from .geometry import DELTA_HAT, ConeBoundary, LogBump, UpstreamBump, UpstreamField
from .spaces import StripGrid

_BUMP_ARITY = {"cone": (3, 3), "upstream": (4, 5)}


def _parse_bumps(text, kind):
    lo, hi = _BUMP_ARITY[kind]
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        vals = tuple(float(p) for p in chunk.replace(",", " ").split())
        if not lo <= len(vals) <= hi:
            raise ValueError(f"{kind} bump needs {lo}-{hi} numbers, got {len(vals)}")
        out.append(vals if len(vals) == hi else vals + (0.0,))
    return tuple(out)


def _emit_bumps(bumps):
    return "; ".join(", ".join(repr(float(v)) for v in b) for b in bumps)


def _parse_floats(text):
    return tuple(float(p) for p in text.replace(",", " ").split())


def _parse_levels(text):
    out = []
    for chunk in text.replace(",", " ").split():
        a, _, b = chunk.partition("x")
        out.append((int(a), int(b)))
    return tuple(out)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (section, key, parser, emitter, default); None default marks optional keys
_FLOAT = (float, repr)
_INT = (int, str)
_STR = (str, str)
_BOOL = (_parse_bool, lambda b: "true" if b else "false")

SCHEMA = (
    ("gas", "gamma", *_FLOAT, 2.0),
    ("gas", "nu", *_FLOAT, None),
    ("gas", "mach_inf", *_FLOAT, None),
    ("gas", "b", *_FLOAT, None),
    ("gas", "omega0", *_FLOAT, None),
    ("gas", "nu0", *_FLOAT, 0.05),
    ("grid", "t_min", *_FLOAT, -12.0),
    ("grid", "t_max", *_FLOAT, 12.0),
    ("grid", "n_t", *_INT, 1024),
    ("grid", "n_theta", *_INT, 129),
    ("grid", "background_steps", *_INT, 2000),
    ("perturbation", "epsilon", *_FLOAT, 0.0),
    ("perturbation", "eps0", *_FLOAT, 0.01),
    ("perturbation", "margin", *_FLOAT, 0.1),
    ("perturbation", "cone_share", *_FLOAT, 1.0),
    ("perturbation", "upstream_share", *_FLOAT, 1.0),
    ("perturbation", "delta_hat", *_FLOAT, DELTA_HAT),
    ("perturbation", "enforce_gates", *_BOOL, True),
    ("cone", "bumps", lambda s: _parse_bumps(s, "cone"), _emit_bumps, ()),
    ("upstream", "bumps", lambda s: _parse_bumps(s, "upstream"), _emit_bumps, ()),
    ("solver", "q", *_FLOAT, 4.0),
    ("solver", "tol_inner", *_FLOAT, 1e-9),
    ("solver", "tol_outer", *_FLOAT, 1e-8),
    ("solver", "max_inner", *_INT, 50),
    ("solver", "max_outer", *_INT, 30),
    ("solver", "rate_cap", *_FLOAT, 0.95),
    ("solver", "decay_tol", *_FLOAT, 1e-3),
    ("output", "flow_stride", *_INT, 8),
    ("output", "apple_samples", *_INT, 200),
    ("output", "seed", *_INT, 0),
    ("linsolve", "levels", _parse_levels, lambda v: ", ".join(f"{a}x{b}" for a, b in v), ((256, 33), (512, 65), (1024, 129))),
    ("sweep", "parameter", *_STR, None),
    ("sweep", "values", _parse_floats, lambda v: ", ".join(repr(float(x)) for x in v), None),
)

SECTIONS = tuple(dict.fromkeys(s for s, *_ in SCHEMA))
_ATTR = {(s, k): (k if s in ("gas", "grid", "perturbation", "solver", "output", "linsolve") else f"{s}_{k}")
         for s, k, *_ in SCHEMA}
SWEEPABLE = ("epsilon", "nu", "mach_inf", "b", "gamma", "cone_share", "upstream_share")


@dataclass(frozen=True)
class CaseConfig:
    gamma: float = 2.0
    nu: float = None
    mach_inf: float = None
    b: float = None
    omega0: float = None
    nu0: float = 0.05
    t_min: float = -12.0
    t_max: float = 12.0
    n_t: int = 1024
    n_theta: int = 129
    background_steps: int = 2000
    epsilon: float = 0.0
    eps0: float = 0.01
    margin: float = 0.1
    cone_share: float = 1.0
    upstream_share: float = 1.0
    delta_hat: float = DELTA_HAT
    enforce_gates: bool = True
    cone_bumps: tuple = ()
    upstream_bumps: tuple = ()
    q: float = 4.0
    tol_inner: float = 1e-9
    tol_outer: float = 1e-8
    max_inner: int = 50
    max_outer: int = 30
    rate_cap: float = 0.95
    decay_tol: float = 1e-3
    flow_stride: int = 8
    apple_samples: int = 200
    seed: int = 0
    levels: tuple = ((256, 33), (512, 65), (1024, 129))
    sweep_parameter: str = None
    sweep_values: tuple = None

    def __post_init__(self):
        validate(self)

    def gas(self):
        if self.nu is not None:
            return GasParameters.from_nu(self.gamma, self.nu)
        return GasParameters.from_mach(self.gamma, self.mach_inf)

    @property
    def nu_value(self):
        return self.nu if self.nu is not None else self.mach_inf**-2

    def with_value(self, name, value):
        """Copy with one parameter replaced (the other member of an exclusive pair is dropped)."""
        changes = {name: value}
        if name == "nu":
            changes["mach_inf"] = None
        elif name == "mach_inf":
            changes["nu"] = None
        elif name == "b":
            changes["omega0"] = None
        return replace(self, **changes)

    def grid(self, omega0, omega1):
        return StripGrid(self.t_min, self.t_max, self.n_t, omega0, omega1, self.n_theta)

    def cone(self, omega0):
        return ConeBoundary(omega0, tuple(LogBump(*b) for b in self.cone_bumps))

    def upstream(self, omega0, omega1):
        return UpstreamField(omega0, omega1, tuple(UpstreamBump(*b) for b in self.upstream_bumps), self.delta_hat)


def validate(case, lines=None):
    lines = lines or {}

    def fail(msg, *keys):
        line = next((lines[k] for k in keys if k in lines), None)
        raise ConfigError(msg, line=line)

    if case.nu is None and case.mach_inf is None:
        fail("one of nu and mach_inf is required", ("section", "gas"))
    if case.nu is not None and case.mach_inf is not None:
        # both given: accepted only when they agree
        if not math.isclose(case.nu, case.mach_inf**-2, rel_tol=1e-12):
            fail("nu and mach_inf conflict", ("gas", "mach_inf"), ("gas", "nu"))
    if (case.b is None) == (case.omega0 is None):
        fail("exactly one of b and omega0 is required", ("gas", "omega0"), ("gas", "b"), ("section", "gas"))
    if not 1.0 < case.gamma <= 2.0:
        fail("gamma must lie in (1, 2]", ("gas", "gamma"))
    for key in ("nu", "mach_inf", "b", "omega0"):
        val = getattr(case, key)
        if val is not None and not val > 0:
            fail(f"{key} must be positive", ("gas", key))
    if case.omega0 is not None and not case.omega0 < math.pi / 2:
        fail("omega0 must lie below pi/2", ("gas", "omega0"))
    if not case.epsilon >= 0:
        fail("epsilon must be non-negative", ("perturbation", "epsilon"))
    if not case.t_min < case.t_max:
        fail("t_min must be below t_max", ("grid", "t_min"), ("grid", "t_max"))
    if case.n_t < 4 or case.n_t & (case.n_t - 1):
        fail("n_t must be a power of two", ("grid", "n_t"))
    if case.n_theta < 5:
        fail("n_theta must be at least 5", ("grid", "n_theta"))
    if case.q <= 2:
        fail("q must exceed 2", ("solver", "q"))
    for key in ("tol_inner", "tol_outer", "decay_tol", "margin", "eps0", "delta_hat"):
        if not getattr(case, key) > 0:
            fail(f"{key} must be positive", *[(s, k) for s, k in _ATTR if k == key])
    if not 0 < case.rate_cap < 1:
        fail("rate_cap must lie in (0, 1)", ("solver", "rate_cap"))
    if case.flow_stride < 1:
        fail("flow_stride must be at least 1", ("output", "flow_stride"))
    for bump in case.cone_bumps + case.upstream_bumps:
        if not bump[2 if len(bump) == 3 else 3] > 0:
            fail("bump widths must be positive", ("cone", "bumps"), ("upstream", "bumps"))
    if (case.sweep_parameter is None) != (case.sweep_values is None):
        fail("sweep needs both parameter and values", ("sweep", "parameter"), ("sweep", "values"))
    if case.sweep_parameter is not None and case.sweep_parameter not in SWEEPABLE:
        fail(f"cannot sweep {case.sweep_parameter!r}", ("sweep", "parameter"))


def _line_index(text):
    """Map (section, key) to 1-based line numbers."""
    out = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            out.setdefault(("section", section), n)
            continue
        key = re.split(r"[=:]", line, 1)[0].strip().lower()
        out.setdefault((section, key), n)
    return out


def parse_text(text):
    lines = _line_index(text)
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], line=exc.lineno) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc), line=getattr(exc, "lineno", None)) from exc
    known = {(s, k): (p, d) for s, k, p, _, d in SCHEMA}
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", line=lines.get(("section", section)))
        for key, raw in cp.items(section):
            if (section, key) not in known:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line=lines.get((section, key)))
            parser, _ = known[(section, key)]
            try:
                values[_ATTR[(section, key)]] = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", line=lines.get((section, key))) from exc
    # bypass __post_init__ so validation errors carry line numbers
    case = CaseConfig.__new__(CaseConfig)
    defaults = {f.name: f.default for f in fields(CaseConfig)}
    for name, val in {**defaults, **values}.items():
        object.__setattr__(case, name, val)
    validate(case, lines)
    return case


def parse_case(path):
    with open(path) as fh:
        return parse_text(fh.read())


def emit_case(case):
    """Canonical text of a case."""
    out = []
    for section in SECTIONS:
        rows = []
        for s, key, _, emitter, default in SCHEMA:
            if s != section:
                continue
            val = getattr(case, _ATTR[(s, key)])
            if val is None or (val == default and not (s == "gas" and key != "nu0")):
                continue
            rows.append(f"{key} = {emitter(val)}")
        if rows:
            if out:
                out.append("")
            out.append(f"[{section}]")
            out.extend(rows)
    return "\n".join(out) + "\n"


def case_dict(case):
    """JSON-ready view of a case."""
    return {f.name: getattr(case, f.name) for f in fields(case)}
