"""Flat ``key=value`` experiment configuration.

Every key maps to one :class:`ExperimentConfig` field; files may contain
blank lines and ``#`` comments. Command-line overrides use the same syntax.
"""

from dataclasses import dataclass, fields, replace
import math

from .errors import ConfigError
from .kernels import MAX_Q
from .solvers import MAX_TERMS, Scheme

BOUNDARY_MODES = ("dirichlet", "open")
KERNEL_FAMILIES = ("wendland", "literal", "gaussian")
WIDTH_UNITS = ("spacing", "eps0")
TRUNCATION_MODES = ("relative", "absolute")
INTERP_FUNCTIONS = ("gaussian", "sin", "runge")


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one run. Defaults reproduce the constant-velocity study.

    ``dT = 0`` means ``cfl_multiple * dT_CFL`` with ``dT_CFL = eps0 / max|u|``.
    ``x0`` defaults to the left end of the domain. ``ratio`` is ``dT / dt``,
    i.e. the sub-cycle count ``P``.
    """

    scheme: str = "NRBF"
    kernel_family: str = "wendland"
    kernel_p: int = 3
    kernel_q: int = 4
    alpha: float = 30.0
    width_unit: str = "spacing"
    n_nodes: int = 501
    ghost_count: int = 3
    domain_a: float = -2.0
    domain_b: float = 2.0
    sigma: float = 0.2
    x0: float = math.nan
    u: float = 1.0
    gamma: float = 0.0
    sigma_u: float = 0.5
    xc: float = 0.0
    dT: float = 0.0
    cfl_multiple: float = 2.0
    ratio: int = 1_000_000
    M: int = 15
    N: int = 15
    t_final: float = 6.0
    left: str = "dirichlet"
    right: str = "dirichlet"
    jitter: float = 0.0
    seed: int = 0
    truncation: float = 0.0
    truncation_mode: str = "relative"
    lw_cfl: float = 0.8
    basis_columns: str = ""
    fine_points: int = 1001
    interp_function: str = "gaussian"
    output: str = "-"

    @property
    def peak_start(self):
        return self.domain_a if math.isnan(self.x0) else self.x0

    @property
    def varying_velocity(self):
        return self.gamma != 0.0

    def with_values(self, **kw):
        return validate(replace(self, **kw))


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _coerce(key, raw):
    if key not in _FIELDS:
        raise ConfigError(key, "unknown configuration key")
    kind = _FIELDS[key].type
    text = raw.strip()
    try:
        if kind in (int, "int"):
            val = float(text)
            if not val.is_integer():
                raise ValueError
            return int(val)
        if kind in (float, "float"):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {getattr(kind, '__name__', kind)}") from None
    return text


def parse_assignments(items):
    """``["a=1", "b=x"]`` -> ``{"a": 1, "b": "x"}`` with typed values."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item.strip() or "?", "expected key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        out[key] = _coerce(key, raw)
    return out


def read_config_text(text):
    lines = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return parse_assignments(lines)


def load_config(path=None, overrides=(), base=None):
    """Defaults, then the file at ``path``, then ``overrides``; validated."""
    cfg = base or ExperimentConfig()
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(read_config_text(fh.read()))
    values.update(parse_assignments(overrides))
    return validate(replace(cfg, **values))


def _require(cond, key, msg):
    if not cond:
        raise ConfigError(key, msg)


def validate(cfg):
    """Check every field against the preconditions of the modules it feeds."""
    _require(cfg.scheme in {s.value for s in Scheme}, "scheme",
             f"must be one of {', '.join(s.value for s in Scheme)}")
    _require(cfg.kernel_family in KERNEL_FAMILIES, "kernel_family",
             f"must be one of {', '.join(KERNEL_FAMILIES)}")
    _require(cfg.kernel_p >= 1, "kernel_p", "must be >= 1")
    _require(0 <= cfg.kernel_q <= MAX_Q, "kernel_q", f"must lie in [0, {MAX_Q}]")
    _require(cfg.alpha > 0, "alpha", "must be positive")
    _require(cfg.width_unit in WIDTH_UNITS, "width_unit", "must be spacing or eps0")
    _require(cfg.n_nodes >= 2, "n_nodes", "must be >= 2")
    _require(cfg.ghost_count >= 0, "ghost_count", "must be >= 0")
    _require(cfg.domain_b > cfg.domain_a, "domain_b", "must exceed domain_a")
    _require(cfg.sigma > 0, "sigma", "must be positive")
    _require(0.0 <= cfg.gamma < 1.0, "gamma", "must lie in [0, 1)")
    _require(cfg.sigma_u > 0, "sigma_u", "must be positive")
    _require(cfg.dT >= 0, "dT", "must be >= 0 (0 selects cfl_multiple)")
    _require(cfg.cfl_multiple > 0, "cfl_multiple", "must be positive")
    _require(cfg.ratio >= 1, "ratio", "must be an integer >= 1")
    _require(1 <= cfg.M <= MAX_TERMS, "M", f"must lie in [1, {MAX_TERMS}]")
    _require(1 <= cfg.N <= MAX_TERMS, "N", f"must lie in [1, {MAX_TERMS}]")
    _require(cfg.t_final >= 0, "t_final", "must be >= 0")
    _require(cfg.left in BOUNDARY_MODES, "left", "must be dirichlet or open")
    _require(cfg.right in BOUNDARY_MODES, "right", "must be dirichlet or open")
    _require(0.0 <= cfg.jitter < 0.5, "jitter", "must lie in [0, 0.5)")
    _require(cfg.truncation >= 0, "truncation", "must be >= 0")
    _require(cfg.truncation_mode in TRUNCATION_MODES, "truncation_mode",
             "must be relative or absolute")
    _require(0 < cfg.lw_cfl <= 1, "lw_cfl", "must lie in (0, 1]")
    _require(cfg.fine_points >= 2, "fine_points", "must be >= 2")
    _require(cfg.interp_function in INTERP_FUNCTIONS, "interp_function",
             f"must be one of {', '.join(INTERP_FUNCTIONS)}")
    if cfg.basis_columns:
        try:
            cols = basis_columns(cfg)
        except ValueError:
            raise ConfigError("basis_columns", "must be comma-separated node indices") from None
        n = cfg.n_nodes + 2 * cfg.ghost_count
        _require(all(0 <= j < n for j in cols), "basis_columns", f"indices must lie in [0, {n})")
    _require(math.isnan(cfg.x0) or math.isfinite(cfg.x0), "x0", "must be finite")
    return cfg


def basis_columns(cfg):
    """Selected basis columns; the center node when unset."""
    if not cfg.basis_columns.strip():
        return [(cfg.n_nodes + 2 * cfg.ghost_count) // 2]
    return [int(v) for v in cfg.basis_columns.split(",") if v.strip()]


def format_config(cfg):
    """Round-trippable ``key=value`` text."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}={v!r}" if isinstance(v, float) else f"{f.name}={v}")
    return "\n".join(lines) + "\n"
