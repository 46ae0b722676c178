# -------------------------------------------------
# Experiment drivers behind screen_runner.py:
#   run_convergence   mesh ladders, extrapolated energy, surrogate CSVs
#   run_field_slice   Re/Im of the potential on an observation plane
#   run_nu_sweep      penalty sensitivity of the jumps per level
#   run_solve         single solves with solution dumps
# -------------------------------------------------

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from assembly.nitsche import AssembledSystem, NitscheParams, assemble_full
from geometry.mesh import mesh_stats
from geometry.screen import build_model_screen, build_split_screen, build_unit_screen
from helpers.errors import ConfigurationError, DomainError
from helpers.helpers import (
    output_path, save_matrix_dump, save_mesh_dump, save_solution_csv, write_csv
)
from postproc.energy import EnergyEstimate, discrete_energy, extrapolate_energy
from postproc.surrogate import (
    CSV_HEADER, ConvergenceRecord, empirical_rates, error_surrogate, l2_distance, make_record
)
from solver.dense import SolutionVector, solve_dense
from solver.potential import evaluate_potential
from spaces.dofs import CONFORMING, NONCONFORMING, build_dofs

logger = logging.getLogger(__name__)

SCREEN_BUILDERS = {
    "model": build_model_screen,
    "unit": build_unit_screen,
    "split": build_split_screen,
}
SLICE_HEADER = "x,y,z,re,im"
SWEEP_HEADER = "level,h,ndofs,nu,jumps,l2_distance"
LADDER_HEADER = "level,h,ndofs,energy,E_star,C,alpha"


@dataclass
class LevelResult:
    """Everything one mesh level produced: meshes, space, assembled system and solution."""
    level: int
    h: float
    meshes: list
    skeleton: object
    dofs: object
    system: AssembledSystem
    solution: SolutionVector


@dataclass
class RunSummary:
    series: Dict[str, List[ConvergenceRecord]] = field(default_factory=dict)
    energy: Optional[EnergyEstimate] = None
    files: List[str] = field(default_factory=list)
    skipped: int = 0


def build_screen(name: str, level: int):
    try:
        builder = SCREEN_BUILDERS[name]
    except KeyError:
        raise ConfigurationError([f"unknown screen '{name}'"])
    return builder(level)


def series_name(method: str, params: Optional[NitscheParams]) -> str:
    if method == "conforming" or params is None:
        return "conforming"
    if params.nu is not None:
        return f"nitsche_nu{params.nu:g}"
    return f"nitsche_nu0{params.nu0:g}_eps{params.epsilon:g}"


def _k_label(k: float) -> str:
    return f"k{k:g}"


def solve_level(config, method: str, screen: str, level: int,
                params: Optional[NitscheParams] = None) -> LevelResult:
    """
    Meshes `screen` at `level`, assembles the `method` system and solves it.
    Mesh and matrix dumps are written when the config asks for them.

    @raises SolverError: carrying the level.
    """
    _, meshes, skeleton = build_screen(screen, level)
    h, _ = mesh_stats(meshes)
    dofs = build_dofs(meshes, CONFORMING if method == "conforming" else NONCONFORMING)
    print(f"  level {level}: {screen} screen, h = {h:.4g}, N = {dofs.num_dofs} ({method})")

    system = assemble_full(config.k, dofs, skeleton, params, config.orders,
                           threads=config.threads, h=h, level=level)
    if config.dump_mesh:
        save_mesh_dump(meshes, skeleton, output_path(config.out, f"mesh_{screen}_L{level}.txt"))
    if config.dump_matrix:
        save_matrix_dump(system, output_path(config.out, f"matrix_{method}_L{level}_{_k_label(config.k)}.bin"))

    solution = solve_dense(system, level)
    return LevelResult(level, h, meshes, skeleton, dofs, system, solution)


def _repenalise(result: LevelResult, params: NitscheParams) -> LevelResult:
    """Same level with another penalty: only the nu * gram term changes."""
    system = result.system.withPenalty(params.value(result.h))
    solution = solve_dense(system, result.level)
    return LevelResult(result.level, result.h, result.meshes, result.skeleton, result.dofs, system, solution)


def conforming_ladder(config, levels, screen: str = "unit", cache: Optional[Dict] = None) -> Dict[int, LevelResult]:
    """Conforming solves on uniform meshes of `screen`, keyed by level."""
    cache = {} if cache is None else cache
    for level in levels:
        if level not in cache:
            cache[level] = solve_level(config, "conforming", screen, level)
    return cache


def energy_limit(config, ladder: Dict[int, LevelResult]) -> EnergyEstimate:
    levels = list(config.extrapolation_levels)
    points = [(ladder[l].h, discrete_energy(config.k, ladder[l].solution, system=ladder[l].system))
              for l in levels]
    for level, (h, energy) in zip(levels, points):
        logger.info("conforming energy at level %d (h=%.4g): %.12g", level, h, energy)
    return extrapolate_energy(points, levels)


def _record(config, result: LevelResult, e_star: float, nu: Optional[float]) -> ConvergenceRecord:
    residual, jumps = error_surrogate(config.k, result.solution, e_star, result.dofs, result.skeleton,
                                      result.system)
    return make_record(result.level, result.h, result.dofs.num_dofs, nu, residual, jumps)


def _write_series(config, name: str, records: List[ConvergenceRecord]) -> str:
    filename = output_path(config.out, f"convergence_{name}_{_k_label(config.k)}.csv")
    write_csv(filename, CSV_HEADER, ((r.level, r.h, r.ndofs, r.nu, r.residual, r.jumps, r.total, r.rate)
                                     for r in records))
    return filename


def run_convergence(config) -> RunSummary:
    """
    Conforming ladder on the unit screen for E*, then one surrogate series for
    the conforming method or per penalty of the Nitsche method. Writes the
    series CSVs, summary_k<k>.csv and energy_ladder_k<k>.csv.
    """
    summary = RunSummary()
    print(f"Conforming energy ladder, levels {list(config.extrapolation_levels)}")
    ladder = conforming_ladder(config, config.extrapolation_levels)
    estimate = energy_limit(config, ladder)
    summary.energy = estimate
    print(f"Extrapolated energy E* = {estimate.value:.10g} (alpha = {estimate.alpha:.4f})")

    ladder_file = output_path(config.out, f"energy_ladder_{_k_label(config.k)}.csv")
    write_csv(ladder_file, LADDER_HEADER,
              ((l, ladder[l].h, ladder[l].dofs.num_dofs,
                discrete_energy(config.k, ladder[l].solution, system=ladder[l].system),
                estimate.value, estimate.C, estimate.alpha) for l in config.extrapolation_levels))
    summary.files.append(ladder_file)

    if config.method == "conforming":
        print(f"Conforming series on the {config.screen} screen, levels {list(config.levels)}")
        results = (conforming_ladder(config, config.levels, cache=ladder) if config.screen == "unit"
                   else conforming_ladder(config, config.levels, config.screen))
        summary.series["conforming"] = empirical_rates(
            [_record(config, results[l], estimate.value, None) for l in config.levels])
    else:
        penalties = config.penalties()
        series: Dict[str, List[ConvergenceRecord]] = {series_name("nitsche", p): [] for p in penalties}
        for level in config.levels:
            first = solve_level(config, "nitsche", config.screen, level, penalties[0])
            for params in penalties:
                result = first if params is penalties[0] else _repenalise(first, params)
                series[series_name("nitsche", params)].append(
                    _record(config, result, estimate.value, result.system.nu))
        summary.series.update({name: empirical_rates(records) for name, records in series.items()})
        # the conforming ladder already solved for E* doubles as the reference series
        summary.series["conforming"] = empirical_rates(
            [_record(config, ladder[l], estimate.value, None) for l in config.extrapolation_levels])

    for name, records in summary.series.items():
        summary.files.append(_write_series(config, name, records))
        for r in records:
            rate = "" if r.rate is None else f", rate {r.rate:.3f}"
            logger.info("%s level %d: residual %.4e, jumps %.4e, total %.4e%s",
                        name, r.level, r.residual, r.jumps, r.total, rate)

    summary_file = output_path(config.out, f"summary_{_k_label(config.k)}.csv")
    write_csv(summary_file, "series," + CSV_HEADER,
              ((name, r.level, r.h, r.ndofs, r.nu, r.residual, r.jumps, r.total, r.rate)
               for name in sorted(summary.series) for r in summary.series[name]))
    summary.files.append(summary_file)
    return summary


def slice_points(plane, resolution: int) -> np.ndarray:
    """(resolution^2, 3) grid on the plane, the free coordinates running lexicographically."""
    axis = "xyz".index(plane.axis)
    free = [i for i in range(3) if i != axis]
    ticks = np.linspace(plane.lo, plane.hi, resolution)
    a, b = np.meshgrid(ticks, ticks, indexing="ij")
    points = np.zeros((resolution * resolution, 3))
    points[:, free[0]] = a.ravel()
    points[:, free[1]] = b.ravel()
    points[:, axis] = plane.offset
    return points


def field_slice(k, result: LevelResult, plane, resolution: int) -> Tuple[List[Tuple], int]:
    """
    @returns (rows x, y, z, re, im for every point off the screen, number of skipped points).
    """
    rows, skipped = [], 0
    for x in slice_points(plane, resolution):
        try:
            value = evaluate_potential(k, result.solution, result.dofs, x, result.h)
        except DomainError as e:
            logger.debug("slice point skipped: %s", e)
            skipped += 1
            continue
        rows.append((x[0], x[1], x[2], value.real, value.imag))
    return rows, skipped


def run_field_slice(config, plane=None, resolution: Optional[int] = None) -> RunSummary:
    """Solves on the finest configured level and samples U_h on the plane."""
    plane = config.slice if plane is None else plane
    resolution = config.slice_resolution if resolution is None else resolution
    level = max(config.levels)
    params = config.penalties()[0] if config.method == "nitsche" else None
    result = solve_level(config, config.method, config.screen, level, params)

    print(f"Evaluating the potential on {plane.label()} with {resolution}x{resolution} points")
    rows, skipped = field_slice(config.k, result, plane, resolution)
    if skipped:
        print(f"Skipped {skipped} point(s) on the screen")
    filename = output_path(config.out, f"slice_{series_name(config.method, params)}_L{level}_"
                                       f"{_k_label(config.k)}.csv")
    write_csv(filename, SLICE_HEADER, rows)
    return RunSummary(files=[filename], skipped=skipped)


def run_nu_sweep(config) -> RunSummary:
    """
    Jumps of the Nitsche solution per level and penalty, and its L2 distance to
    the conforming solution on the same meshes where that space exists.
    """
    rows, summary = [], RunSummary()
    matching = config.screen in ("unit", "split")
    penalties = config.penalties()
    for level in config.levels:
        first = solve_level(config, "nitsche", config.screen, level, penalties[0])
        reference = solve_level(config, "conforming", config.screen, level) if matching else None
        for params in penalties:
            result = first if params is penalties[0] else _repenalise(first, params)
            _, jumps = error_surrogate(config.k, result.solution, 0.0, result.dofs, result.skeleton,
                                       result.system)
            distance = (l2_distance(result.dofs, result.solution.coefficients, reference.dofs,
                                    reference.solution.coefficients) if reference is not None else None)
            rows.append((level, result.h, result.dofs.num_dofs, result.system.nu, jumps, distance))
            print(f"    nu = {result.system.nu:g}: jumps {jumps:.4e}"
                  + ("" if distance is None else f", L2 distance to conforming {distance:.4e}"))
    filename = output_path(config.out, f"nu_sweep_{config.screen}_{_k_label(config.k)}.csv")
    write_csv(filename, SWEEP_HEADER, rows)
    summary.files.append(filename)
    return summary


def run_solve(config) -> Tuple[RunSummary, List[LevelResult]]:
    """One solve per configured level; writes solution CSVs."""
    summary, results = RunSummary(), []
    params = config.penalties()[0] if config.method == "nitsche" else None
    for level in config.levels:
        result = solve_level(config, config.method, config.screen, level, params)
        filename = output_path(config.out, f"solution_{series_name(config.method, params)}_L{level}_"
                                           f"{_k_label(config.k)}.csv")
        save_solution_csv(result.solution, filename)
        print(f"    residual {result.solution.residual:.2e}, condition {result.solution.condition:.2e}")
        summary.files.append(filename)
        results.append(result)
    return summary, results


def run_experiment(config):
    """
    Dispatches on config.experiment.

    @returns (RunSummary, list of LevelResult for plotting, possibly empty).
    """
    if config.experiment == "convergence":
        return run_convergence(config), []
    if config.experiment == "slice":
        return run_field_slice(config), []
    if config.experiment == "nu_sweep":
        if config.method != "nitsche":
            raise ConfigurationError(["the nu sweep needs the nitsche method"])
        return run_nu_sweep(config), []
    if config.experiment == "solve":
        return run_solve(config)
    raise ConfigurationError([f"unknown experiment '{config.experiment}'"])
