"""Experiment orchestration: config in, deterministic CSV/JSON artifacts out.

Subcommands: green, covariance, corrector-scaling, energy, report.
Artifacts embed the canonical config; identical configs produce
byte-identical outputs regardless of worker count, because every
realization draws from a seed stream addressed by its own index and all
reductions run in index order.

Exit codes: 0 success, 2 config/usage, 3 budget, 4 generator,
5 diagnostic, 6 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cfg
from .corrector import scaling_study
from .errors import (
    IO_EXIT_CODE,
    USAGE_EXIT_CODE,
    BudgetError,
    ConfigError,
    DiagnosticError,
    GeneratorError,
)
from .green import dyadic_gradient_norms, green_torus
from .lattice import TorusField, TorusGeometry, laplacian
from .pointsets import IntervalLaw, PairPotential, renewal_pointset_1d, thermodynamic_density
from .randfields import GeneratorSpec, IncrementLaw, empirical_covariance
from .seeding import DOMAIN_POINTSET, derive_seed

__all__ = ["main"]

POOL_CHUNK = 4


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))  # plain float repr even for numpy scalars
    return str(v)


def _write_csv(path: str, config_text: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in config_text.rstrip("\n").split("\n"):
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _generator_spec(values: dict) -> GeneratorSpec:
    kind = values["generator"]
    law = None
    if kind in ("iid", "gradient"):
        try:
            law = IncrementLaw(values["law"], values["law_param"])
        except ValueError as exc:
            raise ConfigError(f"law_param: {exc}") from None
    if kind == "decay_alpha" and values["alpha"] is None:
        raise ConfigError("alpha: required when generator = decay_alpha")
    if values["axis"] >= values["d"]:
        raise ConfigError(f"axis: must be < d, got {values['axis']} for d={values['d']}")
    return GeneratorSpec(kind=kind, axis=values["axis"], law=law, alpha=values["alpha"])


def _run_green(values: dict, out_dir: str, map_fn) -> list[str]:
    geom = TorusGeometry(values["d"], values["L"])
    table = green_torus(values["mu"], geom)
    G = TorusField(geom, table.values)
    resid = values["mu"] * table.values - laplacian(G).values[0]
    resid[(0,) * geom.d] -= 1.0
    residual_max = float(np.max(np.abs(resid)))
    config_text = cfg.canonical_text("green", values)
    rows = []
    slopes = {}
    for p in values["p"]:
        dn = dyadic_gradient_norms(table, p)
        rows.extend((p, i, s) for i, s in dn.annuli)
        slopes[_fmt(float(p))] = {
            "slope": dn.slope,
            "r2": dn.r2,
            "expected_slope": dn.expected_slope,
        }
    csv_path = os.path.join(out_dir, "green_dyadic.csv")
    json_path = os.path.join(out_dir, "green_summary.json")
    _write_csv(csv_path, config_text, ("p", "annulus", "sum"), rows)
    _write_json(
        json_path,
        {
            "artifact": "green_summary",
            "d": geom.d,
            "L": geom.L,
            "mu": values["mu"],
            "site_sum": table.site_sum,
            "wrap_estimate": table.wrap_estimate,
            "residual_max": residual_max,
            "sup_grad_abs": float(np.max(np.abs(table.grad))),
            "slopes": slopes,
            "config_text": config_text,
        },
    )
    return [csv_path, json_path]


def _covariance_sample(task):
    spec, geom, seed, idx = task
    return (idx, spec.realize(geom, seed, idx))


def _run_covariance(values: dict, out_dir: str, map_fn) -> list[str]:
    spec = _generator_spec(values)
    geom = TorusGeometry(values["d"], values["L"])
    n = values["n_samples"]
    tasks = [(spec, geom, values["seed"], i) for i in range(n)]
    samples = [None] * n
    for idx, sample in map_fn(_covariance_sample, tasks):
        samples[idx] = sample
    d = geom.d
    lags = []
    for m in sorted(set(values["lag_list"])):
        if m == 0:
            lags.append((0,) * d)
            continue
        for ax in range(d):
            vec = [0] * d
            vec[ax] = m
            lags.append(tuple(vec))
    est = empirical_covariance(samples, lags)
    config_text = cfg.canonical_text("covariance", values)
    rows = []
    for j, lag in enumerate(est.lags):
        lag_label = ";".join(str(int(c)) for c in lag)
        for l in range(d):
            for lp in range(d):
                rows.append(
                    (lag_label, l, lp, est.axis, float(est.cov[j, l, lp]),
                     float(est.stderr[j, l, lp]))
                )
    csv_path = os.path.join(out_dir, "covariance.csv")
    json_path = os.path.join(out_dir, "covariance_summary.json")
    _write_csv(csv_path, config_text, ("lag", "l", "lp", "n", "cov", "stderr"), rows)
    warnings = sorted({w for s in samples for w in s.warnings})
    _write_json(
        json_path,
        {
            "artifact": "covariance_summary",
            "generator": spec.describe(),
            "d": d,
            "L": geom.L,
            "n_samples": n,
            "alpha_hat": "indeterminate" if est.alpha_hat is None else est.alpha_hat,
            "alpha_halfwidth": est.alpha_halfwidth,
            "n_fit_entries": est.n_fit_entries,
            "clamped_mass_fraction": samples[0].clamped_mass_fraction,
            "warnings": warnings,
            "config_text": config_text,
        },
    )
    return [csv_path, json_path]


def _run_scaling(values: dict, out_dir: str, map_fn) -> list[str]:
    spec = _generator_spec(values)
    report = scaling_study(
        spec,
        values["d"],
        mu_grid=values["mu_grid"],
        n_per_mu=values["n"],
        master_seed=values["seed"],
        l_rule_coefficient=values["l_rule_coefficient"],
        l_max=values["l_max"],
        memory_budget_mb=values["memory_budget_mb"],
        map_fn=map_fn,
    )
    config_text = cfg.canonical_text("corrector-scaling", values)
    csv_path = os.path.join(out_dir, "scaling.csv")
    json_path = os.path.join(out_dir, "scaling_report.json")
    _write_csv(csv_path, config_text, report.CSV_HEADER, report.csv_rows())
    payload = {"artifact": "scaling_report", "config_text": config_text}
    payload.update(report.to_dict())
    _write_json(json_path, payload)
    return [csv_path, json_path]


def _run_energy(values: dict, out_dir: str, map_fn) -> list[str]:
    try:
        law = IntervalLaw(values["law"], values["law_a"], values["law_b"])
    except ValueError as exc:
        raise ConfigError(f"law_a/law_b: {exc}") from None
    try:
        V = PairPotential(values["potential"], values["cutoff"], values["exponent"])
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from None
    sizes = values["sizes"]
    if len(sizes) < 3:
        raise ConfigError(f"sizes: need at least 3 box sizes, got {len(sizes)}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("sizes: must be strictly increasing")
    study = thermodynamic_density(
        law,
        V,
        sizes,
        n_seeds=values["n_seeds"],
        master_seed=values["seed"],
        shift=values["shift"],
        map_fn=map_fn,
    )
    config_text = cfg.canonical_text("energy", values)
    csv_path = os.path.join(out_dir, "energy.csv")
    json_path = os.path.join(out_dir, "energy_summary.json")
    _write_csv(csv_path, config_text, ("N", "seed", "energy", "density"), study.records())
    _write_json(
        json_path,
        {
            "artifact": "energy_summary",
            "potential": {"kind": V.kind, "cutoff": V.cutoff, "exponent": V.exponent},
            "law": {"kind": law.kind, "a": law.a, "b": law.b},
            "sizes": list(study.sizes),
            "n_seeds": study.n_seeds,
            "rows": [
                {"N": N, "density_mean": m, "spread": s} for N, m, s in study.rows()
            ],
            "spread_decreases": study.spread_decreases,
            "shift": study.shift,
            "shift_agrees": study.shift_agrees,
            "flags": list(study.flags),
            "config_text": config_text,
        },
    )
    paths = [csv_path, json_path]
    if values["export_points"]:
        # position list for the first study seed at each size
        sub = derive_seed(values["seed"], DOMAIN_POINTSET, 0)
        for N in sizes:
            win = renewal_pointset_1d(law, (-V.cutoff, N + V.cutoff), sub)
            ppath = os.path.join(out_dir, f"points_N{N}_s0.csv")
            rows = [
                (int(win.labels[i, 0]), float(win.points[i, 0]))
                for i in range(win.n_points)
            ]
            _write_csv(ppath, config_text, ("k", "x"), rows)
            paths.append(ppath)
    return paths


_RUNNERS = {
    "green": _run_green,
    "covariance": _run_covariance,
    "corrector-scaling": _run_scaling,
    "energy": _run_energy,
}


def _render_scaling(payload: dict, lines: list[str]) -> None:
    gen = payload.get("generator", {})
    gen_txt = " ".join(f"{k}={v}" for k, v in sorted(gen.items()))
    lines.append(f"  generator: {gen_txt}; seed {payload.get('master_seed')}")
    verdict = payload.get("verdict", "?")
    if verdict == "bounded":
        lines.append("  verdict: bounded (stationary up to translation)")
    else:
        lines.append(f"  verdict: {verdict}")
    fits = payload.get("fits", {})

    def num(x):
        return "n/a" if x is None else f"{x:.4g}"

    lines.append(
        "  fits: log-log slope "
        + num(fits.get("loglog_slope"))
        + f" (R^2 {num(fits.get('loglog_r2'))}), |ln mu| slope "
        + num(fits.get("loglin_slope"))
        + f" (R^2 {num(fits.get('loglin_r2'))}), ratio "
        + num(fits.get("boundedness_ratio"))
    )
    ratio = fits.get("boundedness_ratio")
    ll_s, ll_r = fits.get("loglog_slope"), fits.get("loglog_r2")
    la_r = fits.get("loglin_r2")
    checks = [
        ("bounded: ratio <= 1.5", ratio is not None and ratio <= 1.5),
        (
            "diverging-powerlaw: slope <= -0.25 and R^2 >= 0.9",
            ll_s is not None and ll_s <= -0.25 and ll_r is not None and ll_r >= 0.9,
        ),
        ("diverging-log: affine R^2 >= 0.95", la_r is not None and la_r >= 0.95),
    ]
    for label, ok in checks:
        lines.append(f"    {label}: {'pass' if ok else 'fail'}")
    capped = [p for p in payload.get("points", []) if p.get("capped")]
    if capped:
        lines.append(
            f"  note: L-rule capped at L={payload.get('l_cap')} for "
            f"{len(capped)} of {len(payload.get('points', []))} grid points"
        )


def _render_green(payload: dict, lines: list[str]) -> None:
    lines.append(
        f"  d={payload.get('d')} L={payload.get('L')} mu={payload.get('mu')}: "
        f"site sum {payload.get('site_sum'):.6g}, wrap {payload.get('wrap_estimate'):.3g}, "
        f"residual {payload.get('residual_max'):.3g}"
    )
    for p, fit in sorted(payload.get("slopes", {}).items()):
        ok = abs(fit["slope"] - fit["expected_slope"]) <= 0.3
        lines.append(
            f"  p={p}: annulus slope {fit['slope']:.4g} vs expected "
            f"{fit['expected_slope']:.4g} (within 0.3: {'pass' if ok else 'fail'})"
        )


def _render_covariance(payload: dict, lines: list[str]) -> None:
    alpha = payload.get("alpha_hat")
    if alpha == "indeterminate":
        lines.append("  decay exponent: indeterminate (no significant lags)")
    else:
        hw = payload.get("alpha_halfwidth")
        hw_txt = f" +/- {hw:.3g}" if isinstance(hw, float) else ""
        lines.append(f"  decay exponent alpha_hat = {alpha:.4g}{hw_txt}")
    cmf = payload.get("clamped_mass_fraction")
    if cmf is not None:
        lines.append(f"  clamped spectral mass fraction: {cmf:.3g}")
    for w in payload.get("warnings", []):
        lines.append(f"  warning: {w}")


def _render_energy(payload: dict, lines: list[str]) -> None:
    for row in payload.get("rows", []):
        lines.append(
            f"  N={row['N']}: density {row['density_mean']:.6g} "
            f"(spread {row['spread']:.3g})"
        )
    lines.append(
        f"  spread decreases with N: {'pass' if payload.get('spread_decreases') else 'fail'}"
    )
    agrees = payload.get("shift_agrees")
    if agrees is None:
        lines.append("  shift invariance: skipped")
    else:
        lines.append(
            f"  shifted densities within 2x spread: {'pass' if agrees else 'fail'}"
        )
    for f in payload.get("flags", []):
        lines.append(f"  flag: {f}")


def _cmd_report(paths: list[str]) -> int:
    if not paths:
        sys.stderr.write(
            "usage: incrstat report ARTIFACT.json [ARTIFACT.json ...]\n"
            "no artifacts given\n"
        )
        return USAGE_EXIT_CODE
    loaded = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DiagnosticError(f"corrupt artifact {path}: {exc}") from None
        if not isinstance(payload, dict) or "artifact" not in payload:
            raise DiagnosticError(f"corrupt artifact {path}: missing 'artifact' field")
        loaded.append((path, payload))
    lines: list[str] = []
    scaling = [(p, d) for p, d in loaded if d["artifact"] == "scaling_report"]
    if scaling:
        lines.append("scaling studies")
        by_d: dict[int, list] = {}
        for p, d in scaling:
            by_d.setdefault(int(d.get("d", 0)), []).append((p, d))
        for dim in sorted(by_d):
            lines.append(f" d={dim}")
            for p, payload in by_d[dim]:
                lines.append(f"  [{p}]")
                _render_scaling(payload, lines)
    for kind, title, renderer in (
        ("green_summary", "green diagnostics", _render_green),
        ("covariance_summary", "covariance estimates", _render_covariance),
        ("energy_summary", "energy densities", _render_energy),
    ):
        matching = [(p, d) for p, d in loaded if d["artifact"] == kind]
        if matching:
            lines.append(title)
            for p, payload in matching:
                lines.append(f"  [{p}]")
                renderer(payload, lines)
    unknown = [p for p, d in loaded if d["artifact"] not in
               ("scaling_report", "green_summary", "covariance_summary", "energy_summary")]
    for p in unknown:
        lines.append(f"unrecognized artifact kind in {p}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="incrstat",
        description="Lattice correctors, Green functions and point-set energies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_txt in (
        ("green", "Green table diagnostics: dyadic gradient norms, wrap, residual"),
        ("covariance", "empirical increment covariance and decay exponent"),
        ("corrector-scaling", "Monte Carlo E[phi_mu^2] across a mu-grid with verdict"),
        ("energy", "thermodynamic energy density of renewal point sets"),
    ):
        p = sub.add_parser(name, help=help_txt)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=None, help="worker process count")
    rep = sub.add_parser("report", help="render artifacts as a text summary")
    rep.add_argument("artifacts", nargs="*", help="JSON artifacts produced by runs")
    return parser


def _emit_error(exc: Exception, code: int) -> None:
    sys.stderr.write(
        json.dumps(
            {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        )
        + "\n"
    )


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT_CODE
    try:
        if args.command == "report":
            return _cmd_report(args.artifacts)
        values = cfg.load(args.command, args.config)
        out_dir = args.out or os.environ.get("INCRSTAT_OUT") or values["out"]
        if args.threads is not None:
            threads = args.threads
        else:
            env_threads = os.environ.get("INCRSTAT_THREADS")
            if env_threads is not None:
                try:
                    threads = int(env_threads)
                except ValueError:
                    raise ConfigError(
                        f"INCRSTAT_THREADS: not an integer: {env_threads!r}"
                    ) from None
            else:
                threads = values["threads"]
        if threads < 1:
            raise ConfigError(f"threads: must be at least 1, got {threads}")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"seed: must be nonnegative, got {args.seed}")
            values["seed"] = args.seed
        os.makedirs(out_dir, exist_ok=True)
        runner = _RUNNERS[args.command]
        if threads == 1:
            paths = runner(values, out_dir, map)
        else:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                def pooled(fn, tasks):
                    return ex.map(fn, tasks, chunksize=POOL_CHUNK)

                paths = runner(values, out_dir, pooled)
        for p in paths:
            sys.stdout.write(p + "\n")
        return 0
    except BudgetError as exc:
        _emit_error(exc, exc.exit_code)
        return exc.exit_code
    except ConfigError as exc:
        _emit_error(exc, exc.exit_code)
        return exc.exit_code
    except GeneratorError as exc:
        _emit_error(exc, exc.exit_code)
        return exc.exit_code
    except DiagnosticError as exc:
        _emit_error(exc, exc.exit_code)
        return exc.exit_code
    except OSError as exc:
        _emit_error(exc, IO_EXIT_CODE)
        return IO_EXIT_CODE


if __name__ == "__main__":
    sys.exit(main())
