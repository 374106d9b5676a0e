"""Command line front end: configuration parsing and experiment orchestration.

Subcommands: `run` (execute one experiment from a JSON config), `verify`
(invariant and acceptance suite), `lattices` (list built-in cells), and
`constants` (print the exponent pipeline for a target p and dimension).
Identical config and seed produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from idslab import covering, floquet, ids, io, operators, randomness, ssf, verify, wegner

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EXPERIMENT_KINDS = ("ids", "floquet", "wegner", "ssf", "exhaustion", "verify")


class ConfigError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(f"{path}.{key}", "required field is missing")
    return data[key]


def _site_values(entries, path: str, dimension: int) -> dict:
    values = {}
    if not isinstance(entries, list) or not entries:
        raise ConfigError(path, "expected a non-empty list of {offset, vertex, value}")
    for i, entry in enumerate(entries):
        here = f"{path}[{i}]"
        offset = tuple(int(c) for c in _require(entry, "offset", here))
        if len(offset) != dimension:
            raise ConfigError(f"{here}.offset", f"expected {dimension} components")
        vertex = str(_require(entry, "vertex", here))
        value = float(_require(entry, "value", here))
        values[(offset, vertex)] = value
    return values


def parse_lattice(model_cfg: dict, path: str) -> covering.LatticeSpec:
    lattice = _require(model_cfg, "lattice", path)
    try:
        if isinstance(lattice, str):
            return covering.builtin_lattice(lattice)
        return covering.LatticeSpec.from_dict(lattice)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}.lattice", str(exc)) from exc


def parse_model(config: dict) -> operators.Model:
    model_cfg = _require(config, "model", "config")
    kind = _require(model_cfg, "type", "config.model")
    if kind not in ("rap", "ram", "periodic"):
        raise ConfigError("config.model.type", f"unknown model type {kind!r}")
    spec = parse_lattice(model_cfg, "config.model")
    v_per = {str(k): float(v) for k, v in model_cfg.get("V_per", {}).items()}
    v = u = None
    try:
        if kind == "rap":
            v_cfg = _require(model_cfg, "v", "config.model")
            v = operators.SingleSitePotential(
                values=_site_values(v_cfg.get("values"), "config.model.v.values", spec.dimension),
                coverage=float(v_cfg.get("coverage", 1.0)),
            )
        if kind == "ram":
            u_cfg = _require(model_cfg, "u", "config.model")
            u = operators.SingleSiteDeformation(
                values=_site_values(u_cfg.get("values"), "config.model.u.values", spec.dimension),
                coverage=float(u_cfg.get("coverage", 1.0)),
            )
            u.check_normalized(spec)
        return operators.Model(
            kind=kind,
            spec=spec,
            v=v,
            u=u,
            v_per=v_per,
            metric_mode=model_cfg.get("metric_mode", "measure"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("config.model", str(exc)) from exc


def parse_disorder(config: dict, needed: bool):
    disorder = config.get("disorder")
    if disorder is None or ("distribution" not in disorder and not needed):
        if needed:
            raise ConfigError("config.disorder", "required for disordered models")
        return None, int((disorder or {}).get("seed", 1))
    try:
        dist = randomness.CouplingDistribution.from_dict(_require(disorder, "distribution", "config.disorder"))
    except (ValueError, KeyError) as exc:
        raise ConfigError("config.disorder.distribution", str(exc)) from exc
    return dist, int(disorder.get("seed", 1))


def model_to_dict(model: operators.Model) -> dict:
    data: dict = {"type": model.kind, "lattice": model.spec.to_dict()}
    if model.v_per:
        data["V_per"] = dict(model.v_per)
    if model.v is not None:
        data["v"] = {
            "values": [
                {"offset": list(off), "vertex": label, "value": val}
                for (off, label), val in sorted(model.v.values.items())
            ],
            "coverage": model.v.coverage,
        }
    if model.u is not None:
        data["u"] = {
            "values": [
                {"offset": list(off), "vertex": label, "value": val}
                for (off, label), val in sorted(model.u.values.items())
            ],
            "coverage": model.u.coverage,
        }
    if model.metric_mode != "measure":
        data["metric_mode"] = model.metric_mode
    return data


def _experiment(config: dict) -> dict:
    exp = _require(config, "experiment", "config")
    kind = _require(exp, "kind", "config.experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError("config.experiment.kind", f"unknown experiment {kind!r}")
    return exp


def _floats(exp: dict, key: str, path: str) -> list[float]:
    raw = _require(exp, key, path)
    if isinstance(raw, dict):
        try:
            start, stop, step = float(raw["start"]), float(raw["stop"]), float(raw["step"])
        except KeyError as exc:
            raise ConfigError(f"{path}.{key}", "grid object needs start, stop, step") from exc
        if step <= 0 or stop <= start:
            raise ConfigError(f"{path}.{key}", "grid needs step > 0 and stop > start")
        count = int(round((stop - start) / step)) + 1
        return [start + i * step for i in range(count)]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}.{key}", "expected a non-empty list of numbers")
    return [float(x) for x in raw]


def _ints(exp: dict, key: str, path: str) -> list[int]:
    raw = _require(exp, key, path)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}.{key}", "expected a non-empty list of integers")
    return [int(x) for x in raw]


def run_experiment(config: dict, out_dir: Path, threads: int | None = None) -> list[Path]:
    exp = _experiment(config)
    kind = exp["kind"]
    model = parse_model(config)
    dist, seed = parse_disorder(config, needed=model.needs_disorder and kind != "floquet")
    if "seed" in exp:
        seed = int(exp["seed"])
    written: list[Path] = []
    path = "config.experiment"

    if kind == "floquet":
        grid = int(exp.get("grid", 64))
        bands = floquet.band_structure(model.spec, model.v_per, grid)
        header = floquet.bands_csv_header(bands.dimension, bands.n_bands)
        rows = [list(theta) + list(row) for theta, row in zip(bands.thetas, bands.bands)]
        written.append(io.write_csv(out_dir / "bands.csv", header, rows))
        flats = floquet.flat_band_detect(bands)
        written.append(
            io.write_json(
                out_dir / "floquet.json",
                {
                    "grid": grid,
                    "flat_bands": [{"band": n, "energy": e} for n, e in flats],
                },
            )
        )
        return written

    if kind == "ids":
        energies = _floats(exp, "energies", path)
        boxes = _ints(exp, "boxes", path)
        samples = int(exp.get("samples", 1))
        rows = []
        curves = {}
        for length in boxes:
            agg = covering.build_agglomerate(model.spec, covering.box(model.spec, length))
            curve = ids.expected_ids(model, agg, dist, energies, samples, seed, threads)
            curves[length] = curve
            for i, energy in enumerate(curve.energies):
                rows.append(
                    [
                        float(energy),
                        float(curve.values[i]),
                        float(curve.stderr[i]),
                        length,
                        samples,
                        model.kind,
                        seed,
                    ]
                )
        written.append(io.write_csv(out_dir / "ids.csv", io.IDS_HEADER, rows))
        if "epsilons" in exp:
            eps_list = _floats(exp, "epsilons", path)
            payload = {}
            for length, curve in curves.items():
                payload[str(length)] = [
                    {
                        "eps": pt.eps,
                        "increment": pt.increment,
                        "at_energy": pt.at_energy,
                        "stderr": pt.stderr,
                        "resolution_limited": pt.resolution_limited,
                    }
                    for pt in ids.jump_profile(curve, eps_list)
                ]
            written.append(io.write_json(out_dir / "jumps.json", payload))
        return written

    if kind == "exhaustion":
        energies = _floats(exp, "energies", path)
        boxes = _ints(exp, "boxes", path)
        samples = int(exp.get("samples", 1))
        grid = int(exp.get("grid", 64))
        rows = ids.exhaustion_study(
            model, boxes, energies, samples, seed, dist=dist, bloch_grid=grid, threads=threads
        )
        csv_rows = [
            [r.energy, r.box_length, r.value, r.stderr, r.reference, r.deviation, samples, model.kind, seed]
            for r in rows
        ]
        written.append(io.write_csv(out_dir / "exhaustion.csv", io.EXHAUSTION_HEADER, csv_rows))
        return written

    if kind == "wegner":
        energies = _floats(exp, "energies", path)
        eps_list = _floats(exp, "epsilons", path)
        boxes = _ints(exp, "boxes", path)
        samples = int(exp.get("samples", 100))
        p = float(exp.get("p", 2.0))
        a = float(exp["a"]) if "a" in exp else None
        if dist is None:
            raise ConfigError("config.disorder", "the window statistic needs a distribution")
        table = wegner.wegner_scan(
            model, boxes, energies, eps_list, dist, samples, seed, a=a, threads=threads
        )
        rows = [
            [r.model, r.energy, r.eps, r.box_length, r.n_plus, r.mean, r.stderr, r.samples, r.seed]
            for r in table.rows
        ]
        written.append(io.write_csv(out_dir / "wegner.csv", io.WEGNER_HEADER, rows))
        fits = {}
        for energy in energies:
            for length in boxes:
                if len(eps_list) >= 4:
                    fit = wegner.scaling_fit(table, p, energy=energy, box_length=length)
                    fits[f"eps_scaling_E{energy}_L{length}"] = {
                        "slope": fit.slope,
                        "intercept": fit.intercept,
                        "C_fit": fit.c_fit,
                        "target_exponent": fit.target_exponent,
                        "note": fit.note,
                    }
            if len(boxes) >= 3:
                for eps in eps_list:
                    fit = wegner.volume_scaling(table, energy=energy, eps=eps)
                    fits[f"volume_scaling_E{energy}_eps{eps}"] = {
                        "slope": fit.slope,
                        "intercept": fit.intercept,
                        "note": fit.note,
                    }
        written.append(io.write_json(out_dir / "wegner_fit.json", {"p": p, "fits": fits}))
        return written

    if kind == "ssf":
        boxes = _ints(exp, "boxes", path)
        samples = int(exp.get("samples", 4))
        p = float(exp.get("p", 2.0))
        if dist is None:
            raise ConfigError("config.disorder", "the perturbation scan needs a distribution")
        scan = ssf.effective_perturbation_scan(model, p, boxes, dist, samples, seed, threads)
        rows = [
            [r.box_length, r.sample, io.offset_text(r.site), r.norm_alpha, r.lhs, r.rhs]
            for r in scan.rows
        ]
        written.append(io.write_csv(out_dir / "ssf_scan.csv", io.SSF_SCAN_HEADER, rows))
        summary = {
            "model": scan.model_kind,
            "p": scan.p,
            "alpha": scan.alpha,
            "k": scan.k,
            "mean_norm_by_L": {
                str(L): float(np.mean(vals)) for L, vals in sorted(scan.norms_by_length().items())
            },
            "superbound_violations": int(sum(1 for r in scan.rows if r.lhs > r.rhs * (1 + 1e-9))),
        }
        if len(boxes) >= 2:
            summary["log_slope_mean"] = scan.log_slope("mean")
        written.append(io.write_json(out_dir / "ssf_report.json", summary))
        return written

    raise ConfigError("config.experiment.kind", f"unhandled experiment {kind!r}")


def cmd_run(args) -> int:
    raw_path = args.config_opt or args.config_pos
    if not raw_path:
        print("error: no config given (positional path or --config)", file=sys.stderr)
        return EXIT_CONFIG
    config_path = Path(raw_path)
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_cfg = config.get("output", {})
    out_dir = Path(args.out or out_cfg.get("directory", "out"))
    if args.seed is not None:
        config.setdefault("disorder", {})["seed"] = args.seed
    if args.samples is not None:
        config.setdefault("experiment", {})["samples"] = args.samples

    exp_kind = config.get("experiment", {}).get("kind")
    if exp_kind == "verify":
        return cmd_verify_level(config.get("experiment", {}).get("level", "quick"), None)

    try:
        written = run_experiment(config, out_dir, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    names = ", ".join(p.name for p in written)
    print(f"{exp_kind}: wrote {names} to {out_dir}")
    return EXIT_OK


def cmd_verify_level(level: str, only: str | None) -> int:
    if level not in ("quick", "full"):
        print(f"error: unknown verify level {level!r}", file=sys.stderr)
        return EXIT_CONFIG
    results = verify.run_suite(level, only=only)
    failures = 0
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name} [{result.seconds:.1f}s] {result.detail}")
        failures += 0 if result.passed else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILED


def cmd_lattices(_args) -> int:
    for name in sorted(covering.BUILTIN_LATTICES):
        spec = covering.builtin_lattice(name)
        summary = covering.BUILTIN_LATTICES[name]["summary"]
        print(f"{name}: d={spec.dimension}, cell={list(spec.cell_vertices)} ({summary})")
    return EXIT_OK


def cmd_constants(args) -> int:
    try:
        consts = wegner.holder_constants(args.p, args.d)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(
        json.dumps(
            {
                "p": consts.p,
                "d": consts.d,
                "alpha": consts.alpha,
                "q": consts.q,
                "k": consts.k,
                "g": f"(x+1)^-{consts.k}",
            }
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idslab",
        description="Spectral statistics of periodic and random operators on periodic graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment from a JSON config")
    run_p.add_argument("config_pos", nargs="?", metavar="config", help="path to the JSON config")
    run_p.add_argument("--config", dest="config_opt", help="path to the JSON config")
    run_p.add_argument("--out", help="output directory (overrides config)")
    run_p.add_argument("--seed", type=int, help="seed override")
    run_p.add_argument("--samples", type=int, help="sample-count override")
    run_p.add_argument("--threads", type=int, help="worker count (default IDSLAB_THREADS or 1)")
    run_p.set_defaults(func=cmd_run)

    verify_p = sub.add_parser("verify", help="run the invariant/acceptance suite")
    verify_p.add_argument("level", nargs="?", default="quick", choices=["quick", "full"])
    verify_p.add_argument("--only", help="run a single named check")
    verify_p.set_defaults(func=lambda args: cmd_verify_level(args.level, args.only))

    lat_p = sub.add_parser("lattices", help="list built-in lattices")
    lat_p.set_defaults(func=cmd_lattices)

    const_p = sub.add_parser("constants", help="print the exponent pipeline for (p, d)")
    const_p.add_argument("p", type=float)
    const_p.add_argument("d", type=int)
    const_p.set_defaults(func=cmd_constants)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
