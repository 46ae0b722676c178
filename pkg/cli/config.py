# -------------------------------------------------
# Run configuration: command line flags, config files and validation into a
# typed RunConfig. Every violation is collected before anything is assembled.
# -------------------------------------------------

import argparse
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from assembly.nitsche import NitscheParams, QuadratureOrders
from helpers.errors import ConfigurationError
from helpers.helpers import parse_range

METHODS = ("conforming", "nitsche")
EXPERIMENTS = ("convergence", "solve", "slice", "nu_sweep")
SCREENS = ("model", "unit", "split")
OUT_ENV = "SCREENBEM_OUT"
DEFAULT_OUT = "results"


@dataclass(frozen=True)
class SliceSpec:
    """
    Square observation grid in the plane {axis = offset}, covering [lo, hi]
    in the two other coordinates.
    """
    axis: str = "z"
    offset: float = 0.3
    lo: float = -1.0
    hi: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "SliceSpec":
        """'z=0.3' or 'z=0.3,-1,1'."""
        try:
            plane, *extent = [part.strip() for part in str(text).split(",")]
            axis, offset = plane.split("=")
            axis = axis.strip().lower()
            if axis not in ("x", "y", "z"):
                raise ValueError(axis)
            lo, hi = (float(v) for v in extent) if extent else (-1.0, 1.0)
            if not lo < hi:
                raise ValueError(extent)
            return cls(axis, float(offset), lo, hi)
        except ValueError:
            raise ConfigurationError([f"slice must look like 'z=0.3' or 'z=0.3,-1,1', got '{text}'"])

    def label(self) -> str:
        return f"{self.axis}={self.offset:g},{self.lo:g},{self.hi:g}"


@dataclass(frozen=True)
class RunConfig:
    method: str
    k: float
    nu: Tuple[float, ...] = ()
    nu0: Optional[float] = None
    epsilon: float = 0.0
    levels: Tuple[int, ...] = (1, 2, 3)
    extrapolation_levels: Tuple[int, ...] = (1, 2, 3, 4, 5)
    orders: QuadratureOrders = field(default_factory=QuadratureOrders)
    screen: str = "model"
    experiment: str = "convergence"
    out: str = DEFAULT_OUT
    dump_mesh: bool = False
    dump_matrix: bool = False
    threads: int = 1
    visualise: bool = False
    slice: SliceSpec = field(default_factory=SliceSpec)
    slice_resolution: int = 21

    def penalties(self) -> List[NitscheParams]:
        """One NitscheParams per configured nu, or the single nu0 h^-epsilon policy."""
        if self.nu:
            return [NitscheParams(nu=nu) for nu in self.nu]
        return [NitscheParams(nu0=self.nu0, epsilon=self.epsilon)]

    def describe(self) -> List[str]:
        lines = [f"Method: {self.method} on the {self.screen} screen, k = {self.k:g}"]
        if self.method == "nitsche":
            lines.append(f"Penalty: nu = {', '.join(f'{v:g}' for v in self.nu)}" if self.nu
                         else f"Penalty: nu = {self.nu0:g} h^-{self.epsilon:g}")
        lines.append(f"Levels: {list(self.levels)} (energy ladder {list(self.extrapolation_levels)})")
        lines.append(f"Quadrature orders d,v,e,c = {self.orders.label()}, far order {self.orders.far} "
                     f"beyond {self.orders.far_ratio:g} diameters")
        lines.append(f"Output directory: {self.out}, threads: {self.threads}")
        return lines


def _to_bool(value, name: str, bad: List[str]) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    bad.append(f"{name} must be true or false, got '{value}'")
    return False


def _to_float(value, name: str, bad: List[str]) -> Optional[float]:
    try:
        result = float(value)
    except (TypeError, ValueError):
        bad.append(f"{name} must be a number, got '{value}'")
        return None
    if not math.isfinite(result):
        bad.append(f"{name} must be finite, got '{value}'")
        return None
    return result


def _to_int(value, name: str, bad: List[str]) -> Optional[int]:
    try:
        return int(str(value).strip())
    except ValueError:
        bad.append(f"{name} must be an integer, got '{value}'")
        return None


def _to_levels(value, name: str, bad: List[str]) -> Tuple[int, ...]:
    try:
        levels = tuple(parse_range(value, name))
    except ConfigurationError as e:
        bad.extend(e.violations)
        return ()
    if not levels:
        bad.append(f"{name} must not be empty")
    elif min(levels) < 0:
        bad.append(f"{name} must be >= 0")
    return levels


def _to_nu_list(value, bad: List[str]) -> Tuple[float, ...]:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    values = []
    for item in items:
        v = _to_float(item, "nu", bad)
        if v is not None:
            if v <= 0.0:
                bad.append("nu must be > 0")
            values.append(v)
    return tuple(values)


def validate_config(raw: dict) -> RunConfig:
    """
    @param raw: merged key-values from the config file and the flags.
    @returns RunConfig.
    @raises ConfigurationError: with every violation found.
    """
    bad: List[str] = []
    raw = {key.replace("-", "_"): value for key, value in raw.items() if value is not None}

    method = str(raw.get("method", "")).lower()
    if method not in METHODS:
        bad.append(f"method must be one of {', '.join(METHODS)}, got '{raw.get('method')}'")
    experiment = str(raw.get("experiment", "convergence")).lower()
    if experiment not in EXPERIMENTS:
        bad.append(f"experiment must be one of {', '.join(EXPERIMENTS)}, got '{experiment}'")
    screen = str(raw.get("screen", "unit" if method == "conforming" else "model")).lower()
    if screen not in SCREENS:
        bad.append(f"screen must be one of {', '.join(SCREENS)}, got '{screen}'")
    elif method == "conforming" and screen == "model":
        bad.append("the conforming method needs matching meshes: use the unit or split screen")

    k = _to_float(raw.get("k"), "k", bad) if "k" in raw else None
    if "k" not in raw:
        bad.append("k is required")
    elif k is not None and k < 0.0:
        bad.append("k must be ≥ 0")

    nu = _to_nu_list(raw["nu"], bad) if "nu" in raw else ()
    nu0 = _to_float(raw["nu0"], "nu0", bad) if "nu0" in raw else None
    epsilon = _to_float(raw.get("epsilon", 0.0), "epsilon", bad)
    if nu0 is not None and nu0 <= 0.0:
        bad.append("nu0 must be > 0")
    if epsilon is not None and epsilon < 0.0:
        bad.append("epsilon must be >= 0")
    if method == "nitsche" and not nu and nu0 is None:
        bad.append("nu (or nu0 for the nu0 h^-epsilon policy) is required for the nitsche method")

    levels = _to_levels(raw.get("levels", "1..3"), "levels", bad)
    extrapolation = _to_levels(raw.get("extrapolation_levels", "1..5"), "extrapolation_levels", bad)
    if extrapolation and len(extrapolation) < 3:
        bad.append("extrapolation_levels needs at least 3 levels")

    orders = None
    try:
        far = _to_int(raw.get("far_order", 3), "far_order", bad)
        far_ratio = _to_float(raw.get("far_ratio", 2.0), "far_ratio", bad) \
            if str(raw.get("far_ratio", "")).lower() not in ("inf", "none") else math.inf
        if far is not None and far_ratio is not None:
            orders = QuadratureOrders.fromString(str(raw.get("quad_orders", "8,10,10,12")),
                                                 far=far, far_ratio=far_ratio)
    except ConfigurationError as e:
        bad.extend(e.violations)

    threads = _to_int(raw.get("threads", 1), "threads", bad)
    if threads is not None and threads < 1:
        bad.append("threads must be >= 1")
    resolution = _to_int(raw.get("slice_resolution", 21), "slice_resolution", bad)
    if resolution is not None and resolution < 2:
        bad.append("slice_resolution must be >= 2")
    plane = None
    try:
        plane = SliceSpec.parse(raw.get("slice", "z=0.3"))
    except ConfigurationError as e:
        bad.extend(e.violations)

    flags = {name: _to_bool(raw.get(name, False), name, bad)
             for name in ("dump_mesh", "dump_matrix", "visualise")}
    out = str(raw.get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT)

    if bad:
        raise ConfigurationError(bad)
    return RunConfig(method=method, k=k, nu=nu, nu0=nu0, epsilon=epsilon, levels=levels,
                     extrapolation_levels=extrapolation, orders=orders, screen=screen,
                     experiment=experiment, out=out, threads=threads, slice=plane,
                     slice_resolution=resolution, **flags)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="screen_runner.py",
        description="Nitsche domain decomposition BEM for the hypersingular Helmholtz equation on flat screens.")
    parser.add_argument("config", nargs="?", help="JSON or key=value configuration file")
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--experiment", choices=EXPERIMENTS)
    parser.add_argument("--screen", choices=SCREENS)
    parser.add_argument("--k", type=str, help="wave number k >= 0")
    parser.add_argument("--nu", type=str, help="penalty nu, or a comma separated list for a sweep")
    parser.add_argument("--nu0", type=str, help="penalty policy nu = nu0 h^-epsilon")
    parser.add_argument("--epsilon", type=str)
    parser.add_argument("--levels", type=str, help="mesh levels 'A..B'")
    parser.add_argument("--extrapolation-levels", type=str, help="conforming energy ladder 'A..B'")
    parser.add_argument("--quad-orders", type=str, help="Gauss orders 'd,v,e,c'")
    parser.add_argument("--far-order", type=str)
    parser.add_argument("--far-ratio", type=str)
    parser.add_argument("--out", type=str, help=f"output directory (default ${OUT_ENV} or {DEFAULT_OUT}/)")
    parser.add_argument("--dump-mesh", action="store_const", const=True, default=None)
    parser.add_argument("--dump-matrix", action="store_const", const=True, default=None)
    parser.add_argument("--visualise", action="store_const", const=True, default=None)
    parser.add_argument("--threads", type=str)
    parser.add_argument("--slice", type=str, help="observation plane, e.g. 'z=0.3,-1,1'")
    parser.add_argument("--slice-resolution", type=str)
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def merge_config(file_values: dict, args: argparse.Namespace) -> dict:
    """Config file values overridden by every flag that was given."""
    merged = {key.replace("-", "_"): value for key, value in (file_values or {}).items()}
    for key, value in vars(args).items():
        if key in ("config", "verbose") or value is None:
            continue
        merged[key] = value
    return merged
