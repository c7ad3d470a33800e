"""Command-line front end.

Angles are given in degrees in every file and flag. Exit codes: 0 success,
2 usage error, 3 invalid input, 4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import serialization as ser
from .core import PhysicalityError, fidelity, poincare_from_rho, rho_from_poincare
from .counting import NO_DRIFT, DriftModel, per_basis_total, simulate_counts, spawn_seeds
from .distinguish import (
    DEFAULT_RADII,
    PROFILE_DRIFT,
    count_distinguishable,
    ellipsoid_profile,
)
from .process import (
    AnnihilatedStateError,
    KrausSet,
    apply_kraus,
    canonical_processes,
    chi_from_kraus,
    kraus_from_chi,
    kraus_from_elements,
    sphere_map,
    sqpt_end_to_end,
)
from .synthesis import (
    RetardanceErrors,
    UnreachableStateError,
    forward_pipeline,
    synth_angles,
    synth_angles_imperfect,
)
from .tomography import DegenerateCountsError, mle_reconstruct

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3, 4

# Targets with real density matrices, pure and partially mixed.
FIDELITY_TARGETS = (
    ("H", (1.0, 0.0, 0.0)),
    ("D", (0.0, 1.0, 0.0)),
    ("mixed", (0.0, 0.0, 0.0)),
    ("partial_H", (0.5, 0.0, 0.0)),
    ("partial_HD", (0.3, 0.6, 0.0)),
)
FIDELITY_THRESHOLD = 0.997
SQPT_TOLERANCE = 1e-8


class UsageError(Exception):
    pass


class InvalidInput(Exception):
    pass


class NotConverged(Exception):
    pass


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc


def _read_state(path) -> np.ndarray:
    return ser.state_from_json(_read_json(path))


def _read_process(path) -> KrausSet:
    """Process file: ``{"elements": [...]}``, ``{"kraus": [...]}``, a chi JSON or ``{"canonical": name}``."""
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise InvalidInput("process JSON must be an object")
    if "elements" in obj:
        return kraus_from_elements([ser.element_from_json(e) for e in obj["elements"]])
    if "kraus" in obj:
        return KrausSet(tuple(ser.matrix_from_json(m) for m in obj["kraus"]))
    if "basis" in obj:
        return kraus_from_chi(ser.chi_from_json(obj))
    if "canonical" in obj:
        catalog = canonical_processes()
        if obj["canonical"] not in catalog:
            raise InvalidInput(f"unknown canonical process {obj['canonical']!r}; choose from {sorted(catalog)}")
        return catalog[obj["canonical"]]
    raise InvalidInput("process JSON needs 'elements', 'kraus', 'canonical' or a chi matrix")


def _drift(args, default: DriftModel = NO_DRIFT) -> DriftModel:
    if args.drift_amplitude is None:
        return default
    if args.drift_amplitude == 0:
        return NO_DRIFT
    return DriftModel(args.drift_amplitude, "sinusoidal")


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} is stochastic and needs --seed")
    return args.seed


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        ser.atomic_write(args.out, text)


def _out_dir(args) -> Path:
    return Path(args.out if args.out is not None else ".")


def _write_files(directory: Path, files: dict[str, str]) -> None:
    for name, text in files.items():
        ser.atomic_write(directory / name, text)


def _tomo_json(result) -> dict:
    return {
        "rho": ser.matrix_to_json(result.rho),
        "r": ser.poincare_to_json(result.r),
        "likelihood": result.residual_likelihood,
        "iterations": result.iterations,
        "converged": result.converged,
    }


def _round_angle(theta: float, step_deg: float | None) -> float:
    if not step_deg:
        return theta
    return math.radians(round(math.degrees(theta) / step_deg) * step_deg)


# subcommands --------------------------------------------------------------


def cmd_synth(args) -> int:
    target = _read_state(args.target)
    errors = None
    if args.hwp_error_deg or args.qwp_error_deg:
        errors = RetardanceErrors(math.radians(args.hwp_error_deg), math.radians(args.qwp_error_deg))
        try:
            angles = synth_angles_imperfect(target, errors)
        except UnreachableStateError as exc:
            raise NotConverged(str(exc)) from exc
    else:
        angles = synth_angles(target)
    angles = tuple(_round_angle(a, args.round_deg) for a in angles)
    f = fidelity(forward_pipeline(angles, errors=errors), target)
    out = {f"theta{i + 1}_deg": math.degrees(a) for i, a in enumerate(angles)}
    out["forward_fidelity"] = f
    _emit(args, ser.dumps(out))
    return EXIT_OK


def cmd_simulate_counts(args) -> int:
    seed = _need_seed(args)
    rho = _read_state(args.state)
    total = args.counts if args.counts is not None else 150_000
    if total <= 0 or args.repeat < 1:
        raise InvalidInput("--counts and --repeat must be positive")
    drift = _drift(args)
    records = [
        simulate_counts(rho, per_basis_total(total), drift, child, exact_expectation=args.exact_expectation)
        for child in spawn_seeds(seed, args.repeat)
    ]
    _emit(args, ser.counts_to_csv(records))
    return EXIT_OK


def cmd_tomo(args) -> int:
    try:
        text = Path(args.counts_csv).read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read {args.counts_csv}: {exc}") from exc
    records = ser.counts_from_csv(text)
    for i, rec in enumerate(records):
        if rec.normalization == 0:
            raise InvalidInput(f"row {i}: N0 + N1 = 0, counts cannot be normalized")
    results = [mle_reconstruct(rec) for rec in records]
    payload = [_tomo_json(r) for r in results]
    _emit(args, ser.dumps(payload[0] if len(payload) == 1 else payload))
    bad = [i for i, r in enumerate(results) if not r.converged]
    if bad:
        raise NotConverged(f"reconstruction did not converge for rows {bad}")
    return EXIT_OK


def cmd_fidelity(args) -> int:
    a, b = _read_state(args.state_a), _read_state(args.state_b)
    _emit(args, ser.dumps({"fidelity": fidelity(a, b)}))
    return EXIT_OK


def cmd_process_apply(args) -> int:
    k = _read_process(args.process)
    rho = _read_state(args.state)
    try:
        out, weight = apply_kraus(k, rho)
    except AnnihilatedStateError as exc:
        raise InvalidInput(str(exc)) from exc
    _emit(args, ser.dumps({"rho": ser.matrix_to_json(out), "r": ser.poincare_to_json(poincare_from_rho(out)), "weight": weight}))
    return EXIT_OK


def cmd_sqpt(args) -> int:
    k = _read_process(args.process)
    if args.exact_expectation:
        seed = args.seed if args.seed is not None else 0
    else:
        seed = _need_seed(args)
    counts = args.counts if args.counts is not None else 100_000
    if counts <= 0:
        raise InvalidInput("--counts must be positive")
    chi = sqpt_end_to_end(k, counts, seed, exact_expectation=args.exact_expectation, drift=_drift(args))
    _emit(args, ser.dumps(ser.chi_to_json(chi)))
    return EXIT_OK


def cmd_sphere_map(args) -> int:
    k = _read_process(args.process)
    m = sphere_map(k, (args.lat, args.lon))
    _write_files(
        _out_dir(args),
        {
            "sphere_map.csv": ser.sphere_map_to_csv(m),
            "sphere_map.svg": ser.equirectangular_svg(m.outputs, sizes=m.weights, title="process output"),
        },
    )
    return EXIT_OK


def _profile(args):
    seed = _need_seed(args)
    radii = tuple(float(r) for r in args.radii.split(",")) if args.radii else DEFAULT_RADII
    if len(radii) < 2:
        raise InvalidInput("need at least two radii")
    counts = args.counts if args.counts is not None else 300_000
    trials = args.trials if args.trials is not None else 10
    if counts <= 0 or trials < 3:
        raise InvalidInput("--counts must be positive and --trials at least 3")
    return ellipsoid_profile(
        radii,
        trials,
        counts,
        seed,
        drift=_drift(args, PROFILE_DRIFT),
        exact_expectation=args.exact_expectation,
    )


def cmd_distinguish(args) -> int:
    if not 0.0 < args.packing <= 1.0:
        raise InvalidInput("--packing must lie in (0, 1]")
    profile = _profile(args)
    est = count_distinguishable(profile, args.packing, args.method)
    _write_files(
        _out_dir(args),
        {
            "profile.csv": ser.profile_to_csv(profile),
            "packing.json": ser.dumps(
                {"total_states": est.total_states, "method": est.method, "packing_fraction": est.packing_fraction}
            ),
        },
    )
    return EXIT_OK


def cmd_sphere_patches(args) -> int:
    profile = _profile(args)
    rows = []
    for e in profile:
        axes = e.axes_directions.reshape(-1)
        semi = args.scale * np.array([e.radial_semiaxis, *e.transverse_semiaxes])
        rows.append([*e.mean_r, *semi, *axes])
    header = ["rH", "rD", "rR", "a_radial", "a_t1", "a_t2"] + [
        f"{name}_{c}" for name in ("radial", "t1", "t2") for c in ("rH", "rD", "rR")
    ]
    _write_files(
        _out_dir(args),
        {
            "patches.csv": ser.csv_table(header, rows),
            "patches.svg": ser.equirectangular_svg(
                [e.mean_r for e in profile], sizes=[args.scale * 100 * e.radial_semiaxis for e in profile]
            ),
        },
    )
    return EXIT_OK


# experiments --------------------------------------------------------------


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def experiment_state_fidelity(args) -> tuple[dict[str, str], list[str]]:
    seed = _need_seed(args)
    total = args.counts if args.counts is not None else 150_000
    trials = args.trials if args.trials is not None else 100
    drift = _drift(args, DriftModel(0.005, "sinusoidal"))
    rows, medians, points = [], {}, []
    for (name, r), child in zip(FIDELITY_TARGETS, spawn_seeds(seed, len(FIDELITY_TARGETS))):
        target = rho_from_poincare(r)
        fids = []
        for t, trial_seed in enumerate(spawn_seeds(child, trials)):
            rec = simulate_counts(
                target, per_basis_total(total), drift, trial_seed, exact_expectation=args.exact_expectation
            )
            res = mle_reconstruct(rec)
            fids.append(fidelity(res.rho, target))
            points.append(res.r)
            rows.append((name, t, fids[-1]))
        medians[name] = float(np.median(fids))
    csv_text = "target,trial,fidelity\n" + "".join(f"{n},{t},{f!r}\n" for n, t, f in rows)
    files = {
        "fidelities.csv": csv_text,
        "summary.json": ser.dumps({"median_fidelity": medians, "threshold": FIDELITY_THRESHOLD}),
        "reconstructions.svg": ser.equirectangular_svg(points, title="reconstructed states"),
    }
    lines = [
        f"state-fidelity {name}: median {m:.5f} >= {FIDELITY_THRESHOLD} {_status(m >= FIDELITY_THRESHOLD)}"
        for name, m in medians.items()
    ]
    return files, lines


def experiment_ellipsoids(args) -> tuple[dict[str, str], list[str]]:
    profile = _profile(args)
    est = count_distinguishable(profile, args.packing, args.method)
    by_r = {round(e.radius, 2): e.radial_semiaxis for e in profile}
    files = {
        "profile.csv": ser.profile_to_csv(profile),
        "packing.json": ser.dumps(
            {"total_states": est.total_states, "method": est.method, "packing_fraction": est.packing_fraction}
        ),
        "patches.svg": ser.equirectangular_svg([e.mean_r for e in profile]),
    }
    lines = []
    if 1.0 in by_r and 0.25 in by_r:
        a1, a25 = by_r[1.0], by_r[0.25]
        ok = 0.0021 / 2 <= a1 <= 0.0021 * 2 and 0.0062 / 2 <= a25 <= 0.0062 * 2 and a1 < a25
        lines.append(f"ellipsoids thickness |r|=1: {a1:.4f}, |r|=0.25: {a25:.4f} {_status(ok)}")
    ok = 1e6 <= est.total_states <= 1e7
    lines.append(f"ellipsoids distinguishable states {est.total_states:.3g} in [1e6, 1e7] {_status(ok)}")
    return files, lines


def experiment_sqpt_catalog(args) -> tuple[dict[str, str], list[str]]:
    if args.exact_expectation:
        seed = args.seed if args.seed is not None else 0
    else:
        seed = _need_seed(args)
    counts = args.counts if args.counts is not None else 100_000
    tol = SQPT_TOLERANCE if args.exact_expectation else 0.05
    files, lines = {}, []
    catalog = canonical_processes()
    for (name, k), child in zip(catalog.items(), spawn_seeds(seed, len(catalog))):
        chi = sqpt_end_to_end(k, counts, child, exact_expectation=args.exact_expectation, drift=_drift(args))
        dist = float(np.linalg.norm(chi.chi - chi_from_kraus(k).chi))
        files[f"chi_{name}.json"] = ser.dumps(ser.chi_to_json(chi))
        files[f"sphere_{name}.svg"] = ser.equirectangular_svg(sphere_map(k).outputs, title=name)
        lines.append(f"sqpt-catalog {name}: |chi - analytic| = {dist:.2e} < {tol:g} {_status(dist < tol)}")
    return files, lines


EXPERIMENTS = {
    "state-fidelity": experiment_state_fidelity,
    "ellipsoids": experiment_ellipsoids,
    "sqpt-catalog": experiment_sqpt_catalog,
}


def cmd_experiment(args) -> int:
    files, lines = EXPERIMENTS[args.name](args)
    summary = "\n".join(lines) + "\n"
    files["summary.txt"] = summary
    _write_files(_out_dir(args), files)
    sys.stdout.write(summary)
    return EXIT_OK


# parser -------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="integer seed; required by stochastic commands")
    g.add_argument("--counts", type=float, default=None, help="photon counts (meaning depends on the command)")
    g.add_argument("--trials", type=int, default=None, help="repetitions per state")
    g.add_argument("--exact-expectation", action="store_true", help="use rounded expected counts instead of sampling")
    g.add_argument("--drift-amplitude", type=float, default=None, help="relative sinusoidal drift, at most 0.005")
    g.add_argument("--out", default=None, help="output file (or directory for multi-file commands)")
    return p


def _profile_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--radii", default=None, help="comma-separated |r| values (default 0,0.25,0.5,0.75,1)")
    p.add_argument("--packing", type=float, default=0.74, help="packing fraction in (0, 1]")
    p.add_argument(
        "--method", choices=("radial_shell_integration", "mean_volume"), default="radial_shell_integration"
    )


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="polqubit",
        description="Polarization-qubit synthesis, tomography and process characterization. "
        "Angles are in degrees in all files and flags.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="waveplate angles for a target state")
    p.add_argument("target", help="state JSON ({re, im} matrix or {rH, rD, rR})")
    p.add_argument("--round-deg", type=float, default=None, help="round angles to this step, e.g. 0.1")
    p.add_argument("--hwp-error-deg", type=float, default=0.0, help="HWP retardance error in degrees")
    p.add_argument("--qwp-error-deg", type=float, default=0.0, help="QWP retardance error in degrees")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate-counts", parents=[common], help="simulate count records for a state")
    p.add_argument("state")
    p.add_argument("--repeat", type=int, default=1, help="number of records")
    p.set_defaults(func=cmd_simulate_counts)

    p = sub.add_parser("tomo", parents=[common], help="maximum-likelihood reconstruction from a counts CSV")
    p.add_argument("counts_csv")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("fidelity", parents=[common], help="fidelity between two states")
    p.add_argument("state_a")
    p.add_argument("state_b")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("process-apply", parents=[common], help="apply a process to a state")
    p.add_argument("process")
    p.add_argument("state")
    p.set_defaults(func=cmd_process_apply)

    p = sub.add_parser("sqpt", parents=[common], help="simulated process tomography; --counts is per input state")
    p.add_argument("process")
    p.set_defaults(func=cmd_sqpt)

    p = sub.add_parser("sphere-map", parents=[common], help="image of the Poincare sphere under a process")
    p.add_argument("process")
    p.add_argument("--lat", type=int, default=25)
    p.add_argument("--lon", type=int, default=50)
    p.set_defaults(func=cmd_sphere_map)

    p = sub.add_parser("distinguish", parents=[common], help="uncertainty-ellipsoid profile and state count")
    _profile_options(p)
    p.set_defaults(func=cmd_distinguish)

    p = sub.add_parser("sphere-patches", parents=[common], help="uncertainty patch geometry for plotting")
    _profile_options(p)
    p.add_argument("--scale", type=float, default=1.0, help="semi-axis magnification, e.g. 5")
    p.set_defaults(func=cmd_sphere_patches)

    p = sub.add_parser("experiment", parents=[common], help="run a reproduction experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    _profile_options(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"polqubit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as exc:
        print(f"polqubit: not converged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (InvalidInput, ser.FormatError, PhysicalityError, DegenerateCountsError, ValueError) as exc:
        print(f"polqubit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
