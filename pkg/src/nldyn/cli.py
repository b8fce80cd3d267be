"""Command-line front end: config ingestion, run orchestration, file outputs.

Config files are flat ``section.key = value`` text: one assignment per
line, ``#`` comment lines, quoted strings for expressions. Unknown or
ill-typed keys reject the whole config (strict parsing). See README for
the full grammar and the list of keys.

Subcommands: simulate, rearrange, predict, check, sweep. Exit codes:
0 success, 1 failed audit, 2 config error, 3 numerical failure,
4 prediction infeasible.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np

from . import dynamics, energy, exprparse, field as field_mod, model, omega
from .errors import (
    ConfigError,
    InfeasibleMeasureError,
    NldynError,
    NoRootError,
    NotConvergedError,
    NumericalFailureError,
)

# test hook: called with the finished trajectory before auditing (cmd_check)
_trajectory_hook = None

_WORKERS_ENV = "NLDYN_WORKERS"

_KEYS: dict[str, tuple[str, object]] = {
    "model.builtin": ("str", None),
    "model.g": ("str", None),
    "model.p": ("str", None),
    "domain.measure": ("float", 1.0),
    "initial.atoms": ("str", None),
    "initial.expr": ("str", None),
    "initial.samples": ("int", None),
    "integrator.t_max": ("float", 100.0),
    "integrator.rtol": ("float", 1e-8),
    "integrator.atol": ("float", 1e-10),
    "integrator.dt_init": ("float", 1e-3),
    "integrator.dt_max": ("float", 1.0),
    "integrator.eps_den": ("float", None),
    "integrator.stat_tol": ("float", 1e-10),
    "integrator.record_every": ("float", 0.1),
    "integrator.lipschitz_cap": ("bool", False),
    "omega.cluster_tol": ("float", 1e-4),
    "output.dir": ("str", "."),
    "output.base": ("str", "run"),
    "run.seed": ("int", 0),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (see _KEYS for defaults)."""

    model_builtin: str | None
    model_g: str | None
    model_p: str | None
    domain_measure: float
    initial_atoms: tuple[tuple[float, float], ...] | None
    initial_expr: str | None
    initial_samples: int | None
    t_max: float
    rtol: float
    atol: float
    dt_init: float
    dt_max: float
    eps_den: float | None
    stat_tol: float
    record_every: float
    lipschitz_cap: bool
    cluster_tol: float
    output_dir: str
    output_base: str
    seed: int

    def integrator_config(self) -> dynamics.IntegratorConfig:
        try:
            return dynamics.IntegratorConfig(
                t_max=self.t_max,
                rtol=self.rtol,
                atol=self.atol,
                dt_init=self.dt_init,
                dt_max=self.dt_max,
                eps_den=self.eps_den,
                stat_tol=self.stat_tol,
                record_every=self.record_every,
                lipschitz_cap=self.lipschitz_cap,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_initial(self) -> field_mod.AtomField:
        if (self.initial_atoms is None) == (self.initial_expr is None):
            raise ConfigError(
                "exactly one of initial.atoms and initial.expr must be given"
            )
        if self.initial_atoms is not None:
            values = [v for v, _ in self.initial_atoms]
            weights = [w for _, w in self.initial_atoms]
            try:
                return field_mod.AtomField(values, weights, self.domain_measure)
            except NldynError as exc:
                raise ConfigError(f"initial.atoms: {exc}") from None
        if self.initial_samples is None or self.initial_samples < 1:
            raise ConfigError("initial.expr needs initial.samples >= 1")
        try:
            ast = exprparse.parse(self.initial_expr, var="x")
        except NldynError as exc:
            raise ConfigError(f"initial.expr: {exc}") from None
        fn = exprparse.to_callable(ast, var="x")
        n = self.initial_samples
        xs = (np.arange(n) + 0.5) * (self.domain_measure / n)
        values = np.asarray(fn(xs), dtype=float)
        if not np.all(np.isfinite(values)):
            raise ConfigError("initial.expr produced non-finite samples")
        return field_mod.from_samples(values.tolist(), self.domain_measure)

    def build_pair(self, u0: field_mod.AtomField) -> model.NonlinearityPair:
        has_builtin = self.model_builtin is not None
        has_expr = self.model_g is not None or self.model_p is not None
        if has_builtin == has_expr:
            raise ConfigError(
                "exactly one of model.builtin and (model.g, model.p) must be given"
            )
        s_range = max(2.0, float(np.max(np.abs(u0.values))) + 1.0)
        try:
            if has_builtin:
                pair = model.builtin_model(self.model_builtin)
                if s_range > 2.0:
                    model.validate_pair(pair, (-s_range, s_range))
                return pair
            if self.model_g is None or self.model_p is None:
                raise ConfigError("both model.g and model.p are required")
            return exprparse.build_model(
                self.model_g, self.model_p, (-s_range, s_range)
            )
        except NldynError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"model: {exc}") from None


def _parse_atoms(text: str) -> tuple[tuple[float, float], ...]:
    atoms = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ConfigError(
                f"initial.atoms entries must be value:weight, got {chunk!r}"
            )
        try:
            atoms.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"initial.atoms: bad number in {chunk!r}") from None
    if not atoms:
        raise ConfigError("initial.atoms is empty")
    return tuple(atoms)


def _typed(raw: str, typ: str, key: str):
    raw = raw.strip()
    if typ == "str":
        if len(raw) < 2 or raw[0] != '"' or raw[-1] != '"':
            raise ConfigError(f"key {key!r} needs a quoted string value, got {raw!r}")
        return raw[1:-1]
    if typ == "bool":
        if raw not in ("true", "false"):
            raise ConfigError(f"key {key!r} needs true or false, got {raw!r}")
        return raw == "true"
    try:
        if typ == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r} needs a {typ} value, got {raw!r}") from None


def parse_config_text(text: str) -> RunConfig:
    """Parse the flat key = value grammar; unknown keys are rejected."""
    seen: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = _typed(raw, _KEYS[key][0], key)

    values = {k: default for k, (_, default) in _KEYS.items()}
    values.update(seen)
    atoms = None
    if values["initial.atoms"] is not None:
        atoms = _parse_atoms(values["initial.atoms"])
    return RunConfig(
        model_builtin=values["model.builtin"],
        model_g=values["model.g"],
        model_p=values["model.p"],
        domain_measure=values["domain.measure"],
        initial_atoms=atoms,
        initial_expr=values["initial.expr"],
        initial_samples=values["initial.samples"],
        t_max=values["integrator.t_max"],
        rtol=values["integrator.rtol"],
        atol=values["integrator.atol"],
        dt_init=values["integrator.dt_init"],
        dt_max=values["integrator.dt_max"],
        eps_den=values["integrator.eps_den"],
        stat_tol=values["integrator.stat_tol"],
        record_every=values["integrator.record_every"],
        lipschitz_cap=values["integrator.lipschitz_cap"],
        cluster_tol=values["omega.cluster_tol"],
        output_dir=values["output.dir"],
        output_base=values["output.base"],
        seed=values["run.seed"],
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config_text(text)


_OVERRIDE_FIELDS = {
    "domain.measure": "domain_measure",
    "initial.samples": "initial_samples",
    "integrator.t_max": "t_max",
    "integrator.rtol": "rtol",
    "integrator.atol": "atol",
    "integrator.dt_init": "dt_init",
    "integrator.dt_max": "dt_max",
    "integrator.eps_den": "eps_den",
    "integrator.stat_tol": "stat_tol",
    "integrator.record_every": "record_every",
    "omega.cluster_tol": "cluster_tol",
    "run.seed": "seed",
}


def apply_override(cfg: RunConfig, key: str, value: float) -> RunConfig:
    """Numeric override for sweeps; atom entries via initial.atoms.<i>.<field>."""
    if key in _OVERRIDE_FIELDS:
        name = _OVERRIDE_FIELDS[key]
        if name in ("initial_samples", "seed"):
            return replace(cfg, **{name: int(value)})
        return replace(cfg, **{name: float(value)})
    parts = key.split(".")
    if (
        len(parts) == 4
        and parts[0] == "initial"
        and parts[1] == "atoms"
        and parts[3] in ("value", "weight")
    ):
        if cfg.initial_atoms is None:
            raise ConfigError(f"cannot vary {key!r}: config has no initial.atoms")
        try:
            idx = int(parts[2])
            atom = cfg.initial_atoms[idx]
        except (ValueError, IndexError):
            raise ConfigError(f"bad atom index in {key!r}") from None
        new_atom = (float(value), atom[1]) if parts[3] == "value" else (atom[0], float(value))
        atoms = list(cfg.initial_atoms)
        atoms[idx] = new_atom
        return replace(cfg, initial_atoms=tuple(atoms))
    raise ConfigError(f"key {key!r} is not a numeric run-config key")


# ------------------------------------------------------------------ outputs

def _out_path(cfg: RunConfig, suffix: str) -> Path:
    directory = Path(cfg.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{cfg.output_base}{suffix}"


def _write_staircase(path: Path, profile: field_mod.StepProfile, title: str):
    header = f"# {title}\n# columns: y value\n"
    path.write_text(header + field_mod.staircase_lines(profile))


def _distribution_table(u: field_mod.AtomField) -> str:
    """Staircase of the distribution function s -> measure of {w > s}.

    The rearranged profile already carries the jump structure: the
    measure strictly above plateau value i is breakpoint i, and the
    left limit at that value is breakpoint i + 1.
    """
    profile = field_mod.rearrange(u)
    lines = ["# columns: s measure_above_s"]
    for i, v in enumerate(profile.plateau_values.tolist()):
        lines.append(f"{v:.17g} {profile.breakpoints[i]:.17g}")
        lines.append(f"{v:.17g} {profile.breakpoints[i + 1]:.17g}")
    return "\n".join(lines) + "\n"


def _summary_lines(
    tr: dynamics.Trajectory, report: dynamics.TrajectoryReport
) -> list[str]:
    drift = float(np.max(np.abs(tr.mass_series - tr.mass_series[0])))
    lines = [
        f"termination = {tr.termination.value}",
        f"hypothesis = {tr.hypothesis.tag}",
        f"energy_index = {tr.energy_index}",
        f"t_final = {tr.times[-1]:.17g}",
        f"mass_initial = {tr.mass_series[0]:.17g}",
        f"mass_drift = {drift:.17g}",
        f"final_energy = {tr.energy_series[-1]:.17g}",
        f"final_max_rhs = {tr.final_max_rhs:.17g}",
    ]
    try:
        elim = energy.energy_limit(tr)
        lines.append(f"energy_limit = {elim.value:.17g}")
        lines.append(f"energy_limit_error_bar = {elim.error_bar:.17g}")
    except NotConvergedError:
        lines.append("energy_limit = not-converged")
    lines.append("")
    lines.append("invariant audit:")
    lines.extend("  " + s for s in report.lines())
    return lines


# ----------------------------------------------------------------- commands

def cmd_simulate(config_path: str, overrides: list[tuple[str, float]] | None = None) -> int:
    cfg = load_config(config_path)
    for key, value in overrides or []:
        cfg = apply_override(cfg, key, value)
    u0 = cfg.build_initial()
    pair = cfg.build_pair(u0)
    icfg = cfg.integrator_config()
    try:
        tr = dynamics.integrate(u0, pair, icfg)
    except NumericalFailureError as exc:
        diag = _out_path(cfg, ".failure.txt")
        diag.write_text(
            f"numerical failure: {exc}\n"
            f"t = {exc.t!r}\nvalues = {np.asarray(exc.values).tolist()!r}\n"
        )
        print(f"numerical failure; diagnostics at {diag}", file=sys.stderr)
        return 3
    report = dynamics.verify_trajectory(tr, pair, tr.hypothesis)
    _out_path(cfg, ".trajectory.csv").write_text(tr.to_csv())
    _write_staircase(
        _out_path(cfg, ".profile.dat"),
        field_mod.rearrange(tr.snapshots[-1]),
        "final decreasing rearrangement",
    )
    _out_path(cfg, ".summary.txt").write_text("\n".join(_summary_lines(tr, report)) + "\n")
    print(f"termination {tr.termination.value} at t = {tr.times[-1]:g}")
    return 0


def cmd_rearrange(
    config_path: str | None,
    inline_values: str | None = None,
    inline_measure: float = 1.0,
    out_dir: str = ".",
    out_base: str = "rearrange",
) -> int:
    if config_path is not None:
        cfg = load_config(config_path)
        u = cfg.build_initial()
    else:
        if not inline_values:
            raise ConfigError("rearrange needs a config or --values")
        try:
            samples = [float(v) for v in inline_values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad --values list: {inline_values!r}") from None
        if not samples:
            raise ConfigError("empty --values list")
        u = field_mod.from_samples(samples, inline_measure)
        cfg = None
    base_cfg = cfg if cfg is not None else replace(
        parse_config_text(""), output_dir=out_dir, output_base=out_base
    )
    profile = field_mod.rearrange(u)
    _write_staircase(
        _out_path(base_cfg, ".staircase.dat"), profile, "decreasing rearrangement"
    )
    _out_path(base_cfg, ".distribution.dat").write_text(_distribution_table(u))
    print(f"wrote staircase with {len(profile.plateau_values)} plateaus")
    return 0


def cmd_predict(
    config_path: str,
    m0: float,
    energy_limit_value: float,
    hypothesis: str | None = None,
) -> int:
    cfg = load_config(config_path)
    # working range for model validation comes from the initial data when present
    try:
        u0 = cfg.build_initial()
    except ConfigError:
        u0 = field_mod.AtomField([0.5], [cfg.domain_measure], cfg.domain_measure)
    pair = cfg.build_pair(u0)
    omega_measure = cfg.domain_measure

    tag = hypothesis.lower() if hypothesis else None
    if tag == "h2":
        print(
            "the analytic predictor is undefined under H2: the constraint system "
            "has three unknowns and two equations",
            file=sys.stderr,
        )
        return 2
    if tag is None:
        if m0 > omega_measure:
            tag = "h1"
        elif m0 < 0.0:
            tag = "h3"
        else:
            print(
                f"cannot infer hypothesis from m0 = {m0!r} "
                f"(needs m0 > |Omega| for H1 or m0 < 0 for H3)",
                file=sys.stderr,
            )
            return 2
    try:
        if tag == "h1":
            pred = omega.predict_h1(m0, energy_limit_value, omega_measure, pair)
        elif tag == "h3":
            pred = omega.predict_h3(m0, energy_limit_value, omega_measure, pair)
        else:
            print(f"unknown hypothesis {hypothesis!r}", file=sys.stderr)
            return 2
    except (NoRootError, InfeasibleMeasureError) as exc:
        print(f"prediction infeasible: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"bad predictor input: {exc}", file=sys.stderr)
        return 2

    print(pred.to_summary(), end="")
    _write_staircase(_out_path(cfg, ".predicted.dat"), pred.to_profile(), "predicted limit profile")
    return 0


@dataclass
class _Audit:
    rows: list[tuple[str, bool, float, float, str]] = dc_field(default_factory=list)

    def add(self, name: str, passed: bool, worst: float, tol: float, detail: str = ""):
        self.rows.append((name, passed, worst, tol, detail))

    @property
    def passed(self) -> bool:
        return all(r[1] for r in self.rows)

    def print(self):
        for name, ok, worst, tol, detail in self.rows:
            mark = "pass" if ok else "FAIL"
            line = f"{mark:4s}  {name:30s} worst {worst:.3e}  tol {tol:.3e}"
            if detail:
                line += f"  ({detail})"
            print(line)


def cmd_check(config_path: str) -> int:
    cfg = load_config(config_path)
    # the dissipation identity needs fine sampling
    cfg = replace(cfg, record_every=min(cfg.record_every, 0.01))
    u0 = cfg.build_initial()
    pair = cfg.build_pair(u0)
    icfg = cfg.integrator_config()
    try:
        tr = dynamics.integrate(u0, pair, icfg)
    except NumericalFailureError as exc:
        print(f"numerical failure during audit run: {exc}", file=sys.stderr)
        return 3
    if _trajectory_hook is not None:
        tr = _trajectory_hook(tr)

    audit = _Audit()
    for c in dynamics.verify_trajectory(tr, pair, tr.hypothesis).checks:
        audit.add(c.name, c.passed, c.worst, c.tol, c.detail)

    # integrated dissipation identity
    if tr.hypothesis.tag is not None and tr.times.size >= 3:
        integral = float(np.trapezoid(tr.dissipation_series, tr.times))
        drop = float(tr.energy_series[-1] - tr.energy_series[0])
        tol = 1e-6 * max(abs(tr.energy_series[0]), 1e-12)
        audit.add("dissipation-identity", abs(drop - integral) <= tol, abs(drop - integral), tol)
    else:
        audit.add("dissipation-identity", True, 0.0, 0.0, "skipped: no hypothesis or too few samples")

    # rearrangement isometry on random snapshot pairs
    rng = np.random.default_rng(cfg.seed)
    n = tr.times.size
    worst_iso = 0.0
    if n >= 2:
        for _ in range(20):
            i, j = rng.integers(0, n, size=2)
            d1 = field_mod.l1_distance(tr.snapshots[i], tr.snapshots[j])
            d2 = field_mod.profile_l1_distance(
                field_mod.rearrange(tr.snapshots[i]), field_mod.rearrange(tr.snapshots[j])
            )
            worst_iso = max(worst_iso, abs(d1 - d2))
    audit.add("rearrangement-isometry", worst_iso <= 1e-12, worst_iso, 1e-12)

    # commutation: integrate the rearranged initial state, compare staircases
    u0_sorted = field_mod.rearrange(u0).to_field()
    try:
        tr2 = dynamics.integrate(u0_sorted, pair, icfg)
        k = min(tr.times.size, tr2.times.size)
        idx = np.unique(np.linspace(0, k - 1, 10).astype(int))
        worst_comm = 0.0
        times_match = bool(np.array_equal(tr.times[:k][idx], tr2.times[:k][idx]))
        for i in idx:
            worst_comm = max(
                worst_comm,
                field_mod.profile_l1_distance(
                    field_mod.rearrange(tr.snapshots[i]),
                    field_mod.rearrange(tr2.snapshots[i]),
                ),
            )
        audit.add(
            "rearrangement-commutation-flow",
            times_match and worst_comm <= 1e-12,
            worst_comm if times_match else math.inf,
            1e-12,
        )
    except NumericalFailureError as exc:
        audit.add("rearrangement-commutation-flow", False, math.inf, 1e-12, str(exc))

    # predictor consistency (H1/H3 only)
    tag = tr.hypothesis.tag
    if tag in ("H1", "H3"):
        try:
            elim = energy.energy_limit(tr)
            emp = omega.extract_limit(tr, cfg.cluster_tol)
            m0 = float(tr.mass_series[0])
            if tag == "H1":
                pred = omega.predict_h1(m0, elim.value, u0.domain_measure, pair)
            else:
                pred = omega.predict_h3(m0, elim.value, u0.domain_measure, pair)
            rep = omega.consistency_check(pred, emp, tol=1e-3)
            worst = max(rep.value_diff, rep.measure_diff, rep.profile_distance)
            audit.add("predictor-consistency", rep.passed, worst, rep.tol)
            res = max(abs(pred.mass_residual), abs(pred.energy_residual))
            audit.add("predictor-residuals", res <= 1e-10, res, 1e-10)
        except NotConvergedError:
            audit.add("predictor-consistency", True, 0.0, 1e-3, "skipped: run not stationary")
        except (NoRootError, InfeasibleMeasureError) as exc:
            audit.add("predictor-consistency", False, math.inf, 1e-3, str(exc))
    else:
        audit.add("predictor-consistency", True, 0.0, 1e-3, f"skipped: hypothesis {tag}")

    audit.print()
    return 0 if audit.passed else 1


def _sweep_one(cfg: RunConfig, key: str, value: float, index: int):
    run_cfg = apply_override(cfg, key, value)
    run_cfg = replace(run_cfg, output_base=f"{cfg.output_base}-{index:03d}")
    u0 = run_cfg.build_initial()
    pair = run_cfg.build_pair(u0)
    tr = dynamics.integrate(u0, pair, run_cfg.integrator_config())
    _out_path(run_cfg, ".trajectory.csv").write_text(tr.to_csv())

    mu = a1 = elim_v = None
    try:
        elim = energy.energy_limit(tr)
        elim_v = elim.value
        tag = tr.hypothesis.tag
        if tag == "H1":
            pred = omega.predict_h1(float(tr.mass_series[0]), elim.value, u0.domain_measure, pair)
            mu, a1 = pred.plateau_values[0], pred.plateau_measures[0]
        elif tag == "H3":
            pred = omega.predict_h3(float(tr.mass_series[0]), elim.value, u0.domain_measure, pair)
            mu, a1 = pred.plateau_values[0], pred.plateau_measures[0]
        else:
            emp = omega.extract_limit(tr, run_cfg.cluster_tol)
            mu, a1 = emp.plateau_values[0], emp.plateau_measures[0]
    except NldynError:
        pass
    return value, mu, a1, elim_v, tr.termination.value


def cmd_sweep(config_path: str, vary: str) -> int:
    cfg = load_config(config_path)
    if "=" not in vary:
        raise ConfigError(f"--vary needs key=start:stop:count, got {vary!r}")
    key, _, grid_text = vary.partition("=")
    key = key.strip()
    parts = grid_text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--vary needs key=start:stop:count, got {vary!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad sweep grid {grid_text!r}") from None
    if count < 1:
        raise ConfigError("sweep count must be >= 1")
    apply_override(cfg, key, start)  # validates the key before spawning work

    grid = [start] if count == 1 else np.linspace(start, stop, count).tolist()
    workers = max(1, int(os.environ.get(_WORKERS_ENV, "4")))
    results: list[tuple] = [None] * len(grid)  # type: ignore[list-item]
    errors: list[tuple[int, Exception]] = []

    def run(i: int, v: float):
        try:
            results[i] = _sweep_one(cfg, key, v, i)
        except Exception as exc:  # recorded per-run, not fatal to the sweep
            errors.append((i, exc))
            results[i] = (v, None, None, None, f"error:{type(exc).__name__}")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, i, v) for i, v in enumerate(grid)]
        for f in futures:
            f.result()

    lines = ["parameter,mu_or_xi,a1,energy_limit,termination"]
    ok = 0
    for value, mu, a1, elim_v, term in results:
        cells = [f"{value:.17g}"]
        for x in (mu, a1, elim_v):
            cells.append("" if x is None else f"{x:.17g}")
        cells.append(term)
        lines.append(",".join(cells))
        if not term.startswith("error:"):
            ok += 1
    _out_path(cfg, ".sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"{ok}/{len(grid)} runs succeeded; index at "
          f"{_out_path(cfg, '.sweep.csv')}")
    return 0 if ok >= 1 else 3


# --------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nldyn",
        description="simulate and analyze the mass-conserving nonlocal dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a config and write outputs")
    p.add_argument("config")

    p = sub.add_parser("rearrange", help="decreasing rearrangement of a field")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--values", help="inline comma-separated samples")
    p.add_argument("--domain-measure", type=float, default=1.0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--base", default="rearrange")

    p = sub.add_parser("predict", help="analytic limit profile from m0 and energy limit")
    p.add_argument("config")
    p.add_argument("--m0", type=float, required=True)
    p.add_argument("--energy-limit", type=float, required=True)
    p.add_argument("--hypothesis", choices=["h1", "h2", "h3"], default=None)

    p = sub.add_parser("check", help="full invariant audit of a config")
    p.add_argument("config")

    p = sub.add_parser("sweep", help="parameter sweep over a numeric config key")
    p.add_argument("config")
    p.add_argument("--vary", required=True, metavar="key=start:stop:count")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config)
        if args.command == "rearrange":
            return cmd_rearrange(
                args.config,
                inline_values=args.values,
                inline_measure=args.domain_measure,
                out_dir=args.out_dir,
                out_base=args.base,
            )
        if args.command == "predict":
            return cmd_predict(
                args.config, args.m0, args.energy_limit, args.hypothesis
            )
        if args.command == "check":
            return cmd_check(args.config)
        if args.command == "sweep":
            return cmd_sweep(args.config, args.vary)
        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
