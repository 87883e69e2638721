"""Line-oriented ``key = value`` run configuration."""
from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, fields, replace

from .moyal import PhaseSpaceGrid, poly_potential
from .wavelets import UnknownFamilyError, make_family

__all__ = ["ConfigError", "RunConfig", "parse_config", "apply_overrides", "SUBCOMMANDS"]

SUBCOMMANDS = ("evolve", "gdr", "analyze", "selftest")
INITIAL_STATES = ("coherent", "ground", "cat")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = "evolve"
    # phase-space box (left edges, periods, dyadic levels)
    q0: float = -8.0
    lq: float = 16.0
    p0: float = -8.0
    lp: float = 16.0
    jq: int = 8
    jp: int = 8
    hbar: float = 1.0
    mass: float = 1.0
    potential: str = "0,0,0.5"
    family_q: str = "daubechies-6"
    family_p: str = "daubechies-6"
    family_t: str = "daubechies-5"
    moyal_cut: int = 1
    decoherence: float = 0.0
    # initial state
    initial: str = "coherent"
    state_q: float = 1.0
    state_p: float = 0.0
    state_omega: float = 1.0
    cat_separation: float = 2.0
    # integrator
    integrator: str = "rk4"
    dt: float = 2 * math.pi / 2048
    t_end: float = math.pi / 2
    safety: float = 0.5
    stride: int = 128
    # space-time Galerkin solve
    gdr_q0: float = -6.0
    gdr_lq: float = 12.0
    gdr_p0: float = -6.0
    gdr_lp: float = 12.0
    gdr_jq: int = 5
    gdr_jp: int = 5
    gdr_nt: int = 64
    gdr_window: float = 0.0  # 0 means one characteristic period 2 pi / state_omega
    gdr_tol: float = 1e-8
    gdr_max_iter: int = 50
    gdr_weight: float = 1e3
    # scale analysis and cut-off ladder
    n_slow: int = 4
    cutoff: bool = False
    eps: float = 1e-4
    ladder_min: int = 32
    ladder_max: int = 512
    # output
    pgm_clip: float = 0.0
    figures: bool = True
    seed: int = 0

    @property
    def grid(self) -> PhaseSpaceGrid:
        return PhaseSpaceGrid(self.q0, self.lq, self.p0, self.lp, self.jq, self.jp, self.hbar, self.mass)

    @property
    def gdr_grid(self) -> PhaseSpaceGrid:
        return PhaseSpaceGrid(self.gdr_q0, self.gdr_lq, self.gdr_p0, self.gdr_lp, self.gdr_jq, self.gdr_jp, self.hbar, self.mass)

    @property
    def window_length(self) -> float:
        return self.gdr_window if self.gdr_window > 0 else 2 * math.pi / self.state_omega

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELDS = {f.name: f for f in fields(RunConfig)}
_TYPES = {name: type(getattr(RunConfig(), name)) for name in _FIELDS}


def _convert(key: str, raw: str, where: str):
    kind = _TYPES[key]
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(raw)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        raise ConfigError(f"{where}: malformed value {raw!r} for {key} (expected {kind.__name__})") from None


def _lookup(key: str, where: str) -> str:
    if key not in _FIELDS:
        near = difflib.get_close_matches(key, list(_FIELDS), n=1, cutoff=0.0)
        hint = f"; nearest valid key is {near[0]!r}" if near else ""
        raise ConfigError(f"{where}: unknown key {key!r}{hint}")
    return key


def _parse_pairs(text: str, source: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source} line {lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        yield _lookup(key.lower(), where), raw, where


def parse_config(text: str = "", source: str = "config") -> RunConfig:
    """Parse a document; omitted keys keep their defaults, later keys win."""
    values = {}
    for key, raw, where in _parse_pairs(text, source):
        values[key] = _convert(key, raw, where)
    return validate(replace(RunConfig(), **values))


def apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    values = {}
    for i, item in enumerate(assignments, start=1):
        for key, raw, where in _parse_pairs(item, f"--set #{i}"):
            values[key] = _convert(key, raw, where)
    return validate(replace(cfg, **values))


def validate(cfg: RunConfig) -> RunConfig:
    """Check every parameter against module preconditions before any work starts."""

    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg} (got {getattr(cfg, key)!r})")

    need(cfg.subcommand in SUBCOMMANDS, "subcommand", f"must be one of {', '.join(SUBCOMMANDS)}")
    for key in ("family_q", "family_p", "family_t"):
        try:
            make_family(getattr(cfg, key))
        except UnknownFamilyError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    for key in ("jq", "jp", "gdr_jq", "gdr_jp"):
        need(5 <= getattr(cfg, key) <= 12, key, "level must lie in 5..12 (32..4096 points)")
    for key in ("lq", "lp", "gdr_lq", "gdr_lp", "hbar", "mass", "dt", "safety", "state_omega", "eps", "gdr_tol", "gdr_weight"):
        need(getattr(cfg, key) > 0, key, "must be positive")
    need(cfg.t_end >= 0, "t_end", "must be nonnegative")
    need(cfg.decoherence >= 0, "decoherence", "must be nonnegative")
    need(cfg.moyal_cut >= 0, "moyal_cut", "must be nonnegative")
    need(cfg.stride >= 1, "stride", "must be at least 1")
    need(cfg.gdr_max_iter >= 1, "gdr_max_iter", "must be at least 1")
    need(cfg.gdr_window >= 0, "gdr_window", "must be nonnegative (0 selects one period)")
    need(cfg.gdr_nt >= 4 and cfg.gdr_nt & (cfg.gdr_nt - 1) == 0, "gdr_nt", "must be a power of two >= 4")
    need(cfg.integrator == "rk4", "integrator", "only 'rk4' is available")
    need(cfg.initial in INITIAL_STATES, "initial", f"must be one of {', '.join(INITIAL_STATES)}")
    need(cfg.pgm_clip >= 0, "pgm_clip", "must be nonnegative (0 selects max|W|)")
    need(cfg.ladder_min >= 32 and cfg.ladder_max >= 2 * cfg.ladder_min, "ladder_max", "ladder needs two rungs of at least 32 points")
    for key in ("ladder_min", "ladder_max"):
        v = getattr(cfg, key)
        need(v & (v - 1) == 0, key, "must be a power of two")
    grid = cfg.grid
    need(0 <= cfg.n_slow < min(grid.Jq, grid.Jp), "n_slow", f"must lie in 0..{min(grid.Jq, grid.Jp) - 1}")
    try:
        poly_potential(cfg.potential)
    except ValueError:
        raise ConfigError(f"potential: expected comma-separated coefficients, got {cfg.potential!r}") from None
    return cfg
