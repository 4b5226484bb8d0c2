"""Command-line front end.

Every subcommand writes its data products (CSV or JSON) into the output
directory together with ``<command>.meta.json``, which records the resolved
settings, the files written, the tool version and an argument list that
reruns the command.  Exit status: 0 on success, 1 on a domain error (the
error class name is printed on stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analytic import HomoclinicFamily, delta_amplitude, delta_integrand
from .errors import RodError
from .flow import RodFlow, Section
from .manifolds import (
    STABLE,
    UNSTABLE,
    compute_sheet,
    detect_homoclinic,
    hausdorff_distance,
    poincare_map,
    refine_equilibrium,
    slice_sheet,
    splitting_gap,
)
from .melnikov import find_simple_zeros, rod_problem
from .model import (
    Params,
    PhysicalParams,
    first_integral_array,
    hamiltonian_array,
    nondimensionalize,
)
from .numerics import IntegratorConfig, QuadratureConfig, quad_realline

ENV_OUTPUT = "MAGROD_OUTPUT_DIR"
COMMANDS = ("equilibria", "eigs", "integrate", "homoclinic-analytic", "melnikov", "delta",
            "manifold", "slice", "homoclinic-detect", "poincare")
STATE_COLUMNS = ["theta", "psi", "p_theta", "p_psi"]
PHYSICAL = ("B", "J", "K", "lam", "C1", "C2", "p_phi")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip decimal in scientific notation (integers stay integers)."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return np.format_float_scientific(float(x), unique=True, trim="-")


@dataclass
class RunConfig:
    command: str
    params: Params
    physical: Optional[PhysicalParams]
    settings: Dict[str, object]
    output_dir: Path
    format: str = "csv"
    files: List[str] = field(default_factory=list)


class Writer:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(cfg.output_dir, os.W_OK):
            raise UsageError(f"output directory {cfg.output_dir} is not writable")

    def table(self, stem: str, columns: Sequence[str], rows) -> Path:
        rows = [list(r) for r in rows]
        if self.cfg.format == "csv":
            path = self.cfg.output_dir / f"{stem}.csv"
            lines = [",".join(columns)] + [",".join(fmt(v) for v in r) for r in rows]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        else:
            path = self.cfg.output_dir / f"{stem}.json"
            doc = {"columns": list(columns), "rows": [[_jsonable(v) for v in r] for r in rows]}
            path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8", newline="\n")
        self.cfg.files.append(path.name)
        return path

    def record(self, stem: str, payload: dict) -> Path:
        path = self.cfg.output_dir / f"{stem}.json"
        path.write_text(json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n",
                        encoding="utf-8", newline="\n")
        self.cfg.files.append(path.name)
        return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return x if math.isfinite(x) else repr(x)
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, Path):
        return str(v)
    return v


def state_rows(t, ys, p: Params):
    ys = np.asarray(ys)
    H = hamiltonian_array(ys.T, p)
    F = first_integral_array(ys.T, p)
    return [[t[i], *ys[i], H[i], F[i]] for i in range(len(t))]


TRAJ_COLUMNS = ["t", *STATE_COLUMNS, "H", "F"]
SLICE_COLUMNS = ["orbit_id", "cont_param", *STATE_COLUMNS, "t_cross"]


def slice_rows(sl):
    return [[int(sl.orbit_id[i]), sl.cont_param[i], *sl.states[i], sl.t_cross[i]] for i in range(len(sl))]


# parser ------------------------------------------------------------------------

def _floats(n):
    def parse(text):
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
        if n and len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
        return vals

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("parameters")
    g.add_argument("--alpha", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--nu", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--gamma", type=float, help="extensibility parameter (overrides --gamma-hat)")
    g.add_argument("--gamma-hat", type=float, help="gamma / eps")
    for name in PHYSICAL:
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float,
                       help="physical constant; give all seven instead of the dimensionless set")
    o = common.add_argument_group("run")
    o.add_argument("--config", help="flat key = value file (or a previous .meta.json); flags override it")
    o.add_argument("--output-dir", help=f"output directory (default ${ENV_OUTPUT} or '.')")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--rtol", type=float)
    o.add_argument("--atol", type=float)

    parser = argparse.ArgumentParser(prog="magrod", description="Homoclinic chaos tools for the magnetic rod.")
    parser.add_argument("--version", action="version", version=f"magrod {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    add("equilibria", "refine both saddle-foci")
    p = add("eigs", "eigen-data at one equilibrium")
    p.add_argument("--which", type=int, choices=(1, 2))
    p = add("integrate", "integrate one orbit")
    p.add_argument("--state", type=_floats(4), help="theta,psi,p_theta,p_psi")
    p.add_argument("--t1", type=float)
    p.add_argument("--samples", type=int)
    p = add("homoclinic-analytic", "sample the closed-form homoclinic orbit")
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--psi0", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--samples", type=int)
    p = add("melnikov", "Melnikov function on a psi0 grid with its zeros")
    p.add_argument("--grid", type=int)
    p.add_argument("--branch", choices=("1", "-1", "both"))
    p.add_argument("--half-width", type=float)
    p.add_argument("--nodes", type=int)
    p = add("delta", "the amplitude Delta(alpha) on a grid")
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--points", type=int)
    for name, help_ in (("manifold", "continue orbit families on W^u / W^s"),
                        ("slice", "section slices of W^u / W^s"),
                        ("homoclinic-detect", "refine a transverse homoclinic orbit")):
        p = add(name, help_)
        p.add_argument("--which", type=int, choices=(1, 2))
        if name != "homoclinic-detect":
            p.add_argument("--side", choices=(UNSTABLE, STABLE, "both"))
        p.add_argument("--steps", type=int)
        p.add_argument("--seed-radius", type=float)
        p.add_argument("--segments", type=int)
        p.add_argument("--max-end-step", type=float)
        p.add_argument("--section", help="psi, p_theta, psi=<value> or n1,n2,n3,n4=<offset>")
        p.add_argument("--direction", type=int, choices=(1, -1, 0))
        if name == "slice":
            p.add_argument("--slice-section", help="section to slice with (default: --section)")
        if name == "homoclinic-detect":
            p.add_argument("--angle-tol", type=float)
            p.add_argument("--samples", type=int)
    p = add("poincare", "Poincare section of seeds on one energy level")
    p.add_argument("--energy", type=float, help="default: energy of the refined equilibrium")
    p.add_argument("--seeds", help="theta,p_theta pairs separated by ';'")
    p.add_argument("--crossings", type=int)
    p.add_argument("--section", help="psi or psi=<value>")
    p.add_argument("--bound", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--skip-failures", action="store_true", default=None)
    return parser


DEFAULTS = {
    "alpha": 0.5, "mu": 0.0, "nu": 0.0, "eps": 0.0, "gamma": None, "gamma_hat": 0.0,
    "format": "csv", "rtol": 1e-11, "atol": 1e-12,
    "which": 1, "state": None, "t1": 100.0, "samples": 2001,
    "branch": None, "psi0": 0.0, "t_max": None,
    "grid": 64, "half_width": None, "nodes": 2048,
    "alpha_min": 0.3, "alpha_max": 5.0, "points": 100,
    "side": "both", "steps": 400, "seed_radius": 1e-5, "segments": 8, "max_end_step": 0.02,
    "section": "psi", "direction": 1, "slice_section": None, "angle_tol": 1e-3,
    "energy": None, "seeds": None, "crossings": 200, "bound": 50.0, "skip_failures": False,
}


def read_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        doc = json.loads(text)
        return dict(doc.get("config", doc))
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key, value, action_types):
    if value is None or not isinstance(value, str):
        return value
    conv = action_types.get(key)
    if conv is None:
        return value
    try:
        return conv(value)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"config key {key!r}: {exc}") from exc


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    sub = parser._subparsers._group_actions[0].choices[args.command]
    types = {}
    for act in sub._actions:
        if act.dest and act.type is not None:
            types[act.dest] = act.type
        elif isinstance(act, argparse._StoreTrueAction):
            types[act.dest] = lambda s: s.strip().lower() in ("1", "true", "yes", "on")
    values = dict(DEFAULTS)
    if args.config:
        file_vals = read_config(args.config)
        for k, v in file_vals.items():
            if k == "command":
                continue
            if k not in values and k not in PHYSICAL and k != "output_dir":
                raise UsageError(f"unknown config key {k!r}")
            values[k] = _coerce(k, v, types)
    for k, v in vars(args).items():
        if k in ("command", "config"):
            continue
        if v is not None:
            values[k] = v
    phys_given = [k for k in PHYSICAL if values.get(k) is not None]
    physical = None
    if phys_given:
        missing = [k for k in PHYSICAL if values.get(k) is None]
        if missing:
            raise UsageError("physical parameters need all of --" + ", --".join(
                k.replace("_", "-") for k in PHYSICAL) + f"; missing {missing}")
        try:
            physical = PhysicalParams(*(float(values[k]) for k in PHYSICAL))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        params = nondimensionalize(physical).params
    else:
        try:
            eps = float(values["eps"])
            if values.get("gamma") is not None:
                params = Params(float(values["alpha"]), float(values["mu"]), float(values["nu"]), eps,
                                float(values["gamma"]))
            else:
                params = Params.scaled(float(values["alpha"]), float(values["mu"]), float(values["nu"]), eps,
                                       float(values["gamma_hat"]))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    out = values.pop("output_dir", None) or os.environ.get(ENV_OUTPUT) or "."
    for k in PHYSICAL:
        values.pop(k, None)
    try:
        IntegratorConfig(float(values["rtol"]), float(values["atol"]))
    except ValueError as exc:
        raise UsageError(f"--rtol/--atol: {exc}") from exc
    return RunConfig(args.command, params, physical, values, Path(out), values["format"])


# commands ------------------------------------------------------------------------

def _flow(cfg: RunConfig) -> RodFlow:
    s = cfg.settings
    return RodFlow(cfg.params, IntegratorConfig(float(s["rtol"]), float(s["atol"])))


def _equilibrium(cfg: RunConfig, which=None):
    which = which or int(cfg.settings["which"])
    return refine_equilibrium(cfg.params, which=which)


def cmd_equilibria(cfg: RunConfig, w: Writer) -> dict:
    rows = []
    summary = {}
    p = cfg.params
    for which in (1, 2):
        eq = refine_equilibrium(p, which=which)
        vals = eq.eigenvalues
        H = hamiltonian_array(eq.state, p)
        F = first_integral_array(eq.state, p)
        rows.append([which, *eq.state, H, F, *np.ravel(np.column_stack([vals.real, vals.imag]))])
        summary[f"equilibrium_{which}"] = {"state": eq.state, "growth": eq.growth, "rotation": eq.rotation}
    cols = ["which", *STATE_COLUMNS, "H", "F"] + [f"{part}{k}" for k in range(1, 5) for part in ("re", "im")]
    w.table("equilibria", cols, rows)
    return summary


def cmd_eigs(cfg: RunConfig, w: Writer) -> dict:
    eq = _equilibrium(cfg)
    rows = [[k + 1, v.real, v.imag] for k, v in enumerate(eq.eigenvalues)]
    w.table("eigenvalues", ["k", "re", "im"], rows)
    frames = []
    for name, mat in (("unstable_plane", eq.unstable_plane), ("stable_plane", eq.stable_plane),
                      ("stable_frame", eq.stable_frame), ("unstable_frame", eq.unstable_frame)):
        for r in range(2):
            frames.append([f"{name}_{r + 1}", *mat[r]])
    w.table("frames", ["name", *STATE_COLUMNS], frames)
    w.table("jacobian", ["row", *STATE_COLUMNS], [[i, *eq.jacobian[i]] for i in range(4)])
    return {"state": eq.state, "biorthogonality": float(np.max(np.abs(eq.stable_frame @ eq.unstable_plane.T)))}


def cmd_integrate(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    if s["state"] is None:
        raise UsageError("integrate needs --state theta,psi,p_theta,p_psi")
    x0 = np.asarray(s["state"], dtype=float)
    traj = _flow(cfg).trajectory(x0, 0.0, float(s["t1"]))
    t = np.linspace(0.0, float(s["t1"]), int(s["samples"]))
    ys = traj(t)
    rows = state_rows(t, ys, cfg.params)
    w.table("trajectory", TRAJ_COLUMNS, rows)
    H = np.array([r[5] for r in rows])
    F = np.array([r[6] for r in rows])
    return {"H_drift": float(np.max(np.abs(H - H[0]))), "F_drift": float(np.max(np.abs(F - F[0])))}


def cmd_homoclinic_analytic(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    fam = HomoclinicFamily(cfg.params.alpha, int(s["branch"] or 1), float(s["psi0"]))
    t_max = float(s["t_max"]) if s["t_max"] is not None else 20.0 / fam.delta
    t = np.linspace(-t_max, t_max, int(s["samples"]))
    ys = fam.state(t).T
    base = Params(cfg.params.alpha)
    w.table("homoclinic_analytic", TRAJ_COLUMNS, state_rows(t, ys, base))
    return {"delta": fam.delta, "t_max": t_max}


def cmd_melnikov(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    branches = {"1": [1], "-1": [-1], "both": [1, -1], None: [1, -1]}[s["branch"]]
    summary = {}
    zero_rows = []
    for b in branches:
        prob = rod_problem(cfg.params, branch=b)
        hw = float(s["half_width"]) if s["half_width"] is not None else 40.0 / prob.decay_rate
        q = QuadratureConfig(hw, int(s["nodes"]))
        res = find_simple_zeros(prob, int(s["grid"]), q)
        stem = "melnikov" if len(branches) == 1 else f"melnikov_branch{'+' if b > 0 else '-'}1"
        w.table(stem, ["psi0", "M"], zip(res.kappa_grid, res.M_values))
        for z in res.zeros:
            zero_rows.append([b, z.kappa, z.slope, z.simple])
        summary[f"branch_{b}"] = {"zeros": [z.kappa for z in res.zeros],
                                  "simple": [z.simple for z in res.zeros], "half_width": hw}
    w.table("melnikov_zeros", ["branch", "psi0", "slope", "simple"], zero_rows)
    return summary


def cmd_delta(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    lo, hi, n = float(s["alpha_min"]), float(s["alpha_max"]), int(s["points"])
    if not (0.25 < lo <= hi) or n < 1:
        raise UsageError("--alpha-min must exceed 1/4 and not exceed --alpha-max; --points >= 1")
    rows = []
    worst = 0.0
    for a in np.linspace(lo, hi, n):
        fam = HomoclinicFamily(a)
        quad = quad_realline(delta_integrand(fam), QuadratureConfig(40.0 / fam.delta, 4096))
        exact = delta_amplitude(a)
        worst = max(worst, abs(quad - exact) / abs(exact))
        rows.append([a, exact, quad])
    w.table("delta", ["alpha", "Delta", "Delta_quad"], rows)
    return {"max_relative_difference": worst}


def _sheets(cfg: RunConfig, sides):
    s = cfg.settings
    eq = _equilibrium(cfg)
    section = Section.parse(str(s["section"]), int(s["direction"]))
    out = {}
    for side in sides:
        out[side] = compute_sheet(cfg.params, side, section, steps=int(s["steps"]),
                                  seed_radius=float(s["seed_radius"]), segments=int(s["segments"]),
                                  equilibrium=eq, max_end_step=float(s["max_end_step"]))
    return eq, section, out


def _sides(cfg):
    side = cfg.settings.get("side") or "both"
    return (UNSTABLE, STABLE) if side == "both" else (side,)


def cmd_manifold(cfg: RunConfig, w: Writer) -> dict:
    eq, section, sheets = _sheets(cfg, _sides(cfg))
    summary = {}
    for side, sheet in sheets.items():
        rows = [[k, o.cont_param, o.T, *o.endpoint, o.residual] for k, o in enumerate(sheet.orbits)]
        w.table(f"manifold_{side}", ["orbit_id", "cont_param", "T", *STATE_COLUMNS, "residual"], rows)
        E = sheet.energies()
        summary[side] = {"orbits": len(sheet.orbits), "stall": sheet.stall_reason,
                         "energy_spread": float(E.max() - E.min())}
    return summary


def cmd_slice(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    eq, section, sheets = _sheets(cfg, _sides(cfg))
    cut = Section.parse(str(s["slice_section"]), int(s["direction"])) if s["slice_section"] else section
    slices = {side: slice_sheet(sheet, cut) for side, sheet in sheets.items()}
    summary = {}
    for side, sl in slices.items():
        w.table(f"slice_{side}", SLICE_COLUMNS, slice_rows(sl))
        summary[side] = {"points": len(sl), "stall": sheets[side].stall_reason}
    if len(slices) == 2 and cut == section:
        summary["hausdorff"] = hausdorff_distance(slices[STABLE], slices[UNSTABLE])
        summary["splitting_gap"] = splitting_gap(slices[STABLE], slices[UNSTABLE])
    return summary


def cmd_homoclinic_detect(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    eq, section, sheets = _sheets(cfg, (UNSTABLE, STABLE))
    su, ss = slice_sheet(sheets[UNSTABLE]), slice_sheet(sheets[STABLE])
    for side, sl in ((UNSTABLE, su), (STABLE, ss)):
        w.table(f"slice_{side}", SLICE_COLUMNS, slice_rows(sl))
    h = detect_homoclinic(ss, su, cfg.params, angle_tol=float(s["angle_tol"]), samples=int(s["samples"]))
    w.table("homoclinic_orbit", TRAJ_COLUMNS, state_rows(h.time, h.states, cfg.params))
    return {"angle": h.angle, "transverse": h.transverse, "crossing": h.crossing, "gap": h.gap,
            "end_residuals": h.end_residuals, "T_u": h.T_u, "T_s": h.T_s}


def cmd_poincare(cfg: RunConfig, w: Writer) -> dict:
    s = cfg.settings
    p = cfg.params
    section = Section.parse(str(s["section"]), 1)
    if s["seeds"] is None:
        raise UsageError("poincare needs --seeds 'theta,p_theta;theta,p_theta;...'")
    seeds = []
    for chunk in str(s["seeds"]).split(";"):
        if chunk.strip():
            vals = [float(v) for v in chunk.split(",")]
            if len(vals) not in (2, 4):
                raise UsageError(f"--seeds: cannot parse {chunk!r}")
            seeds.append(vals)
    energy = s["energy"]
    if energy is None:
        energy = float(hamiltonian_array(_equilibrium(cfg).state, p))
    sl = poincare_map(p, float(energy), section, seeds, int(s["crossings"]),
                      t_max=float(s["t_max"]) if s["t_max"] is not None else None,
                      bound=float(s["bound"]), on_error="skip" if s["skip_failures"] else "raise")
    w.table("poincare", SLICE_COLUMNS, slice_rows(sl))
    return {"energy": float(energy), "points": len(sl)}


HANDLERS = {
    "equilibria": cmd_equilibria, "eigs": cmd_eigs, "integrate": cmd_integrate,
    "homoclinic-analytic": cmd_homoclinic_analytic, "melnikov": cmd_melnikov, "delta": cmd_delta,
    "manifold": cmd_manifold, "slice": cmd_slice, "homoclinic-detect": cmd_homoclinic_detect,
    "poincare": cmd_poincare,
}


def rerun_argv(cfg: RunConfig) -> List[str]:
    argv = [cfg.command]
    if cfg.physical is not None:
        for k in PHYSICAL:
            argv += [f"--{k.replace('_', '-')}", repr(getattr(cfg.physical, k))]
    else:
        p = cfg.params
        argv += ["--alpha", repr(p.alpha), "--mu", repr(p.mu), "--nu", repr(p.nu), "--eps", repr(p.eps),
                 "--gamma", repr(p.gamma)]
    sub_flags = set(build_parser()._subparsers._group_actions[0].choices[cfg.command]._option_string_actions)
    for k, v in sorted(cfg.settings.items()):
        flag = "--" + k.replace("_", "-")
        if v is None or flag not in sub_flags or k in ("alpha", "mu", "nu", "eps", "gamma", "gamma_hat"):
            continue
        if isinstance(v, bool):
            if v:
                argv.append(flag)
            continue
        if isinstance(v, (list, tuple)):
            v = ",".join(repr(float(x)) for x in v)
        argv += [flag, str(v) if not isinstance(v, float) else repr(v)]
    argv += ["--output-dir", str(cfg.output_dir)]
    return argv


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args, parser)
        w = Writer(cfg)
        summary = HANDLERS[cfg.command](cfg, w)
    except (UsageError, ValueError) as exc:
        print(f"magrod {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except RodError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    meta = {
        "tool": "magrod",
        "version": __version__,
        "command": cfg.command,
        "params": asdict(cfg.params),
        "physical": asdict(cfg.physical) if cfg.physical is not None else None,
        "config": {k: v for k, v in cfg.settings.items() if v is not None},
        "files": list(cfg.files),
        "summary": summary,
        "rerun": rerun_argv(cfg),
    }
    meta["config"].update({k: v for k, v in asdict(cfg.params).items() if v is not None})
    w.record(f"{cfg.command}.meta", meta)
    print(json.dumps({"files": cfg.files}), file=sys.stdout)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
