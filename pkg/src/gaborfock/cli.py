"""Command-line front end: ``gfl sigma | verify | scan | reconstruct``.

Results go out as newline-delimited JSON records (sorted keys) or CSV.
Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import dual, series, sigma as sg
from .bargmann import GaborAtom, HermiteExpansion
from .errors import GaborFockError
from .fock import FockFunction, lattice_points
from .series import VerificationReport

DEFAULT_TOLERANCE = 1e-8
DEFAULT_RADIUS = 8.0

SUITES = ("biorth", "bound", "sampling", "interchange", "sigma")
QUANTITIES = ("gram-minsv", "density", "growth-ratio", "coeff-bound")

# measured once on the 200 x 200 grid of [-6, 6]^2 restricted to |z| <= 6
GROWTH_C1 = 0.542065853101555
GROWTH_C2 = 0.9999206740113613
SAMPLING_REFERENCE = 0.18034


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    tolerance: float = DEFAULT_TOLERANCE
    radius: float = DEFAULT_RADIUS
    seed: int = 0
    format: str = "json"
    output: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise UsageError("tolerance must be positive")
        if not (self.radius >= 2 and math.isfinite(self.radius)):
            raise UsageError("radius must be at least 2")
        if self.jobs < 1:
            raise UsageError("jobs must be at least 1")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")

    def echo(self) -> dict:
        """The part of the configuration that determines results."""
        return {"tolerance": self.tolerance, "radius": self.radius, "seed": self.seed}

    def scaled(self, threshold: float) -> float:
        """Pass threshold loosened in proportion to a tolerance above the default."""
        return threshold * max(1.0, self.tolerance / DEFAULT_TOLERANCE)


# --------------------------------------------------------------------------
# parsing helpers


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"expected 're,im', got {text!r}")
    try:
        re_, im_ = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise UsageError(f"bad complex number {text!r}") from exc
    if not (math.isfinite(re_) and math.isfinite(im_)):
        raise UsageError("complex number must be finite")
    return complex(re_, im_)


def parse_radii(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        radii = [float(r) for r in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad radius list {text!r}") from exc
    if any(not math.isfinite(r) or r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise UsageError("radii must be positive, finite and increasing")
    return radii


def _env(name: str, cast, default):
    raw = os.environ.get("GFL_" + name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise UsageError(f"bad value for GFL_{name}: {raw!r}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    def pick(flag, name, cast, default):
        return flag if flag is not None else _env(name, cast, default)

    return RunConfig(
        command=args.command,
        tolerance=pick(args.tolerance, "TOLERANCE", float, DEFAULT_TOLERANCE),
        radius=pick(args.radius, "RADIUS", float, DEFAULT_RADIUS),
        seed=pick(args.seed, "SEED", int, 0),
        format=pick(args.format, "FORMAT", str, "json"),
        output=args.output,
        jobs=pick(args.jobs, "JOBS", int, 1),
    )


# --------------------------------------------------------------------------
# output


def _finite(x):
    """Non-finite floats become null so every line is strict JSON."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_finite(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _json_line(rec: dict) -> str:
    return json.dumps(_finite(rec), sort_keys=True, allow_nan=False)


def _flatten(rec: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and set(v) == {"re", "im"}:
            out[key + "_re"] = v["re"]
            out[key + "_im"] = v["im"]
        elif isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v, sort_keys=True)
        else:
            out[key] = v
    return out


def render_records(records: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(_json_line(r) + "\n" for r in records)
    flat = [_flatten(r) for r in records]
    header = sorted({k for r in flat for k in r})
    return render_csv(header, [[r.get(k, "") for k in header] for r in flat])


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_checks(checks: Sequence[tuple[str, Callable[[], VerificationReport]]], cfg: RunConfig) -> list[dict]:
    """Run checks (possibly concurrently) and return records in check order."""

    def run(item):
        name, fn = item
        try:
            rep = fn()
        except (GaborFockError, ValueError, ArithmeticError) as exc:
            rep = VerificationReport(name, math.nan, False, math.inf, None, {"error": f"{type(exc).__name__}: {exc}"})
        rec = rep.to_record()
        rec["params"]["check"] = name
        rec["params"]["config"] = cfg.echo()
        return rec

    if cfg.jobs > 1 and len(checks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(run, checks))
    return [run(c) for c in checks]


# --------------------------------------------------------------------------
# sigma


def cmd_sigma(z: complex, cfg: RunConfig) -> tuple[list[dict], int]:
    value = complex(sg.sigma(z))
    logv = complex(sg.log_sigma(z))
    ratio = float(sg.growth_ratio(z))
    rel = 1e-12
    base = {"z": z, "on_lattice": bool(sg.is_lattice_point(z))}
    reps = [
        VerificationReport("sigma", value, True, rel * abs(value), None, dict(base)),
        VerificationReport("log-modulus", logv.real if math.isfinite(logv.real) else -math.inf, True, rel, None, dict(base)),
        VerificationReport("growth-ratio", ratio, True, rel * ratio, None, dict(base)),
    ]
    recs = []
    for r in reps:
        rec = r.to_record()
        rec["params"]["config"] = cfg.echo()
        recs.append(rec)
    return recs, 0


# --------------------------------------------------------------------------
# verify suites


def _report(op, value, threshold, params=None, R=None, error=0.0) -> VerificationReport:
    p = dict(params or {})
    p["threshold"] = threshold
    return VerificationReport(op, value, bool(value <= threshold), error, R, p)


def _biorth_checks(cfg: RunConfig):
    R = cfg.radius

    def lattice():
        G = dual.generating_function(dual.GeneratorSpec.lattice_minus_origin())
        pts = G.zero_set(R).array
        M = dual.pairing_matrix(G, pts, pts)
        return _report("biorth-lattice", float(np.abs(M - np.eye(len(pts))).max()), cfg.scaled(1e-10), {"points": len(pts)}, R)

    def shifted():
        G = dual.generating_function(dual.GeneratorSpec.shifted(0.5 + 0.5j))
        pts = G.zero_set(R).array
        M = dual.pairing_matrix(G, pts, pts)
        return _report("biorth-shifted", float(np.abs(M - np.eye(len(pts))).max()), cfg.scaled(1e-10), {"points": len(pts), "shift": 0.5 + 0.5j}, R)

    def perturbed():
        spec = dual.GeneratorSpec.perturbed(removed=[1, 1j], added=[1.3, 0.4 + 1.2j])
        G = dual.generating_function(spec)
        pts = G.zero_set(min(R, 6.0)).array
        M = dual.pairing_matrix(G, pts, pts)
        return _report("biorth-perturbed", float(np.abs(M - np.eye(len(pts))).max()), cfg.scaled(1e-10), spec.describe(), min(R, 6.0))

    def scale():
        G = dual.generating_function(dual.GeneratorSpec.lattice_minus_origin())
        pts = G.zero_set(min(R, 5.0)).array
        err = max(abs(dual.biorth_element(G, w).scale_modulus / abs(w) - 1) for w in pts)
        return _report("biorth-scale", float(err), cfg.scaled(1e-8), {"points": len(pts)}, min(R, 5.0))

    def gram_psd():
        pts = dual.PointSet.lattice(min(R, 8.0))
        low = float(np.linalg.eigvalsh(dual.gram_matrix(pts))[0])
        return VerificationReport("gram-psd", low, bool(low >= -cfg.scaled(1e-10)), 1e-13, min(R, 8.0), {"points": len(pts)})

    return [("biorth-lattice", lattice), ("biorth-shifted", shifted), ("biorth-perturbed", perturbed),
            ("biorth-scale", scale), ("gram-psd", gram_psd)]


def _bound_checks(cfg: RunConfig):
    checks = []
    for k in range(5):
        s = 1000 * cfg.seed + k

        def coeff(s=s):
            rep = series.verify_coeff_bound(series.random_kernel_combination(s), cfg.radius)
            rep.params["kernel_seed"] = s
            return rep

        checks.append((f"coeff-bound-{k}", coeff))
    checks.append(("log-integral", lambda: series.verify_log_integral((2, 4, 8), tol=cfg.tolerance)))
    checks.append(("w-sigma-family", lambda: series.verify_w_sigma_family((1, 2, 4, 6))))
    return checks


def _sampling_checks(cfg: RunConfig):
    R = max(6.0, cfg.radius - 2)

    def constant():
        rep = series.verify_sampling_sum(FockFunction.constant(1.0), R, tol=cfg.tolerance)
        ref = series.theta_sampling_reference()
        dev = abs(rep.value - SAMPLING_REFERENCE)
        rep.params.update({"reference": SAMPLING_REFERENCE, "theta_reference": ref, "reference_tolerance": 1e-4})
        rep.passed = bool(rep.passed and dev <= 1e-4 and abs(rep.value - ref) <= cfg.scaled(1e-12))
        return rep

    def zero():
        return series.verify_sampling_sum(FockFunction.zero(), R, tol=cfg.tolerance)

    def linear():
        return series.verify_sampling_sum(FockFunction.monomial(1), R, tol=cfg.tolerance)

    def kernels():
        return series.verify_sampling_sum(series.random_kernel_combination(cfg.seed), R, tol=cfg.tolerance)

    return [("sampling-constant", constant), ("sampling-zero", zero), ("sampling-linear", linear), ("sampling-kernels", kernels)]


def _interchange_checks(cfg: RunConfig):
    spec = dual.GeneratorSpec.shifted(0.5 + 0.5j)
    R = cfg.radius

    def k2():
        rep = series.verify_interchange(spec, FockFunction.kernel(2.0), R=R, rtol=cfg.scaled(1e-5))
        nxt = series.interchange_sides(spec, FockFunction.kernel(2.0), R=R + 2)
        inc = abs(nxt.rhs - rep.value)
        rep.params["increment_next"] = inc
        rep.passed = bool(rep.passed and inc <= rep.error_bound)
        return rep

    def zero():
        return series.verify_interchange(spec, FockFunction.zero(), R=R)

    def generic():
        S = series.random_kernel_combination(cfg.seed, terms=3, radius=1.5)
        return series.verify_interchange(spec, S, R=R, rtol=cfg.scaled(1e-5))

    return [("interchange-k2", k2), ("interchange-zero", zero), ("interchange-generic", generic)]


def _sigma_checks(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    u = rng.uniform(-0.5, 0.5, 1000) + 1j * rng.uniform(-0.5, 0.5, 1000)
    z = rng.uniform(-3, 3, 4000) + 1j * rng.uniform(-3, 3, 4000)
    z = z[np.abs(z) <= 3][:1000]

    def quasi():
        D = sg.DirectProductSigma()
        l0 = D.log_sigma(u)
        r1 = np.abs(np.expm1(D.log_sigma(u + 1) - l0 - (1j * np.pi + sg.ETA_1 * (u + 0.5)))).max()
        ri = np.abs(np.expm1(D.log_sigma(u + 1j) - l0 - (1j * np.pi + sg.ETA_I * (u + 0.5j)))).max()
        return _report("sigma-quasi-periodicity", float(max(r1, ri)), cfg.scaled(1e-10), {"points": len(u)})

    def agree():
        D = sg.DirectProductSigma()
        err = np.abs(np.expm1(D.log_sigma(z) - sg.log_sigma(z))).max()
        return _report("sigma-method-agreement", float(err), cfg.scaled(1e-10), {"points": len(z)}, 3.0)

    def prime():
        pts = lattice_points(5.0)
        pts = pts[np.abs(pts) >= 1]
        err = max(abs(sg.sigma_prime_lattice(w).log_value.real - math.pi * abs(w) ** 2 / 2) for w in pts)
        return _report("sigma-prime-modulus", float(err), cfg.scaled(1e-8), {"points": len(pts)}, 5.0)

    def periodic():
        g = sg.growth_ratio(u)
        err = max(np.abs(sg.growth_ratio(u + 1) - g).max(), np.abs(sg.growth_ratio(u + 1j) - g).max(),
                  np.abs(sg.growth_ratio(u + 3 - 2j) - g).max())
        return _report("growth-periodicity", float(err), cfg.scaled(1e-9), {"points": len(u)})

    def bounds():
        g = np.linspace(-6, 6, 200)
        Z = g[:, None] + 1j * g[None, :]
        r = sg.growth_ratio(Z[np.abs(Z) <= 6])
        c1, c2 = float(r.min()), float(r.max())
        dev = max(abs(c1 - GROWTH_C1), abs(c2 - GROWTH_C2))
        ok = c2 / c1 <= 10 and dev <= cfg.scaled(1e-6)
        return VerificationReport("growth-bounds", c2 / c1, bool(ok), dev, 6.0,
                                  {"c1": c1, "c2": c2, "frozen_c1": GROWTH_C1, "frozen_c2": GROWTH_C2})

    return [("sigma-quasi-periodicity", quasi), ("sigma-method-agreement", agree), ("sigma-prime-modulus", prime),
            ("growth-periodicity", periodic), ("growth-bounds", bounds)]


SUITE_BUILDERS = {
    "biorth": _biorth_checks,
    "bound": _bound_checks,
    "sampling": _sampling_checks,
    "interchange": _interchange_checks,
    "sigma": _sigma_checks,
}


def cmd_verify(suite: str, cfg: RunConfig) -> tuple[list[dict], int]:
    names = SUITES if suite == "all" else (suite,)
    checks = [c for n in names for c in SUITE_BUILDERS[n](cfg)]
    recs = _run_checks(checks, cfg)
    return recs, 0 if all(r["pass"] for r in recs) else 1


# --------------------------------------------------------------------------
# scan


SCAN_HEADERS = {
    "gram-minsv": ["radius", "points", "min_singular_value", "condition_number"],
    "density": ["radius", "count", "density"],
    "growth-ratio": ["radius", "grid_points", "c1", "c2", "c2_over_c1"],
    "coeff-bound": ["radius", "sup", "sup_half", "stable"],
}


def _scan_row(quantity: str, r: float, cfg: RunConfig) -> list:
    if quantity == "gram-minsv":
        pts = dual.PointSet.lattice(r)
        d = dual.section_diagnostics(pts)
        return [r, len(pts), d.min_singular_value, d.condition_number]
    if quantity == "density":
        pts = lattice_points(r)
        return [r, int(pts.size), dual.upper_density(pts, [r])[0]]
    if quantity == "growth-ratio":
        g = np.linspace(-r, r, 200)
        Z = g[:, None] + 1j * g[None, :]
        vals = sg.growth_ratio(Z[np.abs(Z) <= r])
        c1, c2 = float(vals.min()), float(vals.max())
        return [r, int(vals.size), c1, c2, c2 / c1]
    rep = series.verify_coeff_bound(series.random_kernel_combination(cfg.seed), r)
    return [r, float(rep.value), float(rep.params.get("sup_half", 0.0)), bool(rep.passed)]


def cmd_scan(quantity: str, radii: Sequence[float], cfg: RunConfig) -> tuple[str, int]:
    header = SCAN_HEADERS[quantity]
    if cfg.jobs > 1 and len(radii) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(lambda r: _scan_row(quantity, r, cfg), radii))
    else:
        rows = [_scan_row(quantity, r, cfg) for r in radii]
    if cfg.format == "csv":
        return render_csv(header, rows), 0
    recs = []
    for row in rows:
        d = dict(zip(header, row))
        recs.append({"op": f"scan-{quantity}", "params": {"config": cfg.echo(), **{k: v for k, v in d.items() if k != header[2]}},
                     "value": d[header[2]], "error_bound": 0.0, "truncation_radius": d["radius"], "pass": True})
    return render_records(recs, "json"), 0


# --------------------------------------------------------------------------
# reconstruct


def parse_input(text: str, seed: int):
    """'hermite:N', 'atom:x,y' or 'atoms:K' (K seeded atoms inside the disk of radius 2)."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "hermite":
            return HermiteExpansion.basis(int(arg)), "strict"
        if kind == "atom":
            z = parse_complex(arg)
            return GaborAtom.at(z.real, z.imag), "exact"
        if kind == "atoms":
            return series.random_atom_combination(seed, terms=int(arg or 5)), "monotone"
    except ValueError as exc:
        raise UsageError(f"bad input spec {text!r}") from exc
    raise UsageError(f"unknown input kind {kind!r}")


def cmd_reconstruct(text: str, radii: Sequence[float], cfg: RunConfig) -> tuple[list[dict], int]:
    f, mode = parse_input(text, cfg.seed)
    recs = []
    residuals = []
    for r in radii:
        rec, res = series.finite_section_reconstruct(f, series.LATTICE, r)
        residuals.append(res)
        recs.append(VerificationReport("reconstruct", res, True, 1e-8, r,
                                       {"input": text, "points": len(rec.points),
                                        "condition_number": rec.condition_number, "regularized": rec.regularized}))
    if mode == "strict":
        ok = all(b < a for a, b in zip(residuals, residuals[1:]))
    elif mode == "monotone":
        ok = all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(residuals, residuals[1:]))
    else:
        loc = f.fock_point
        ok = all(res <= 1e-6 for r, res in zip(radii, residuals) if r >= abs(loc))
    trend = VerificationReport("reconstruct-trend", residuals[-1] if residuals else 0.0, bool(ok), 1e-8,
                               radii[-1] if radii else None, {"input": text, "mode": mode, "residuals": residuals})
    out = []
    for rep in recs + [trend]:
        d = rep.to_record()
        d["params"]["config"] = cfg.echo()
        out.append(d)
    return out, 0 if ok else 1


# --------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None)
    common.add_argument("--radius", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--output", default=None)
    common.add_argument("--jobs", type=int, default=None)

    p = _Parser(prog="gfl", description="Bargmann-Fock, sigma-function and Gabor-series checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("sigma", parents=[common], help="evaluate sigma at a point")
    s.add_argument("--z", required=True)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    c = sub.add_parser("scan", parents=[common], help="tabulate a diagnostic over radii")
    c.add_argument("--quantity", choices=QUANTITIES, required=True)
    c.add_argument("--radii", default="")
    r = sub.add_parser("reconstruct", parents=[common], help="finite-section reconstruction residuals")
    r.add_argument("--input", default="hermite:3")
    r.add_argument("--radii", default="2,3,4,5")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "sigma":
            recs, code = cmd_sigma(parse_complex(args.z), cfg)
            emit(render_records(recs, cfg.format), cfg)
        elif args.command == "verify":
            recs, code = cmd_verify(args.suite, cfg)
            emit(render_records(recs, cfg.format), cfg)
        elif args.command == "scan":
            text, code = cmd_scan(args.quantity, parse_radii(args.radii), cfg)
            emit(text, cfg)
        else:
            recs, code = cmd_reconstruct(args.input, parse_radii(args.radii), cfg)
            emit(render_records(recs, cfg.format), cfg)
    except UsageError as exc:
        print(f"gfl: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gfl: error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
