"""Command line entry point: analyze, assemble, eigs, trace, verify, run.

Exit codes: 0 all requested checks pass, 1 some check failed, 2 invalid
configuration, 3 characteristic boundary in strict mode, 4 eigensolver
did not converge.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _kernels
from .assemble import assemble_operator, dump_matrix
from .eigen import EigenError, Spectrum, smallest_k
from .fields import (
    FieldSystem,
    HormanderError,
    enumerate_commutators,
    metivier_condition_check,
    metivier_index,
    nu_via_determinants,
    point_indices,
)
from .geometry import (
    CharacteristicWarning,
    DomainSpec,
    GridError,
    build_grid,
    characteristic_check,
    condition_A_integral,
    measure_H,
)
from .spectral import checks as ck
from .spectral import heat
from .systems import BUNDLED, bundled

log = logging.getLogger("hormander")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_CHARACTERISTIC, EXIT_EIGEN = 0, 1, 2, 3, 4

ALL_CHECKS = (
    "indices", "H", "conditionA", "characteristic", "eigenvalues", "weyl", "trace", "tauberian",
    "thm1", "thm2", "thm4", "thm5", "growth", "hansson_laptev", "heisenberg_lower",
    "kernel", "supnorm", "grushin_log",
)
DEFAULT_TOLERANCES = {"weyl": 0.3, "trace": 0.3, "eigenvalues": 0.01, "growth": 0.15, "kernel": 0.25}
CONFIG_KEYS = {
    "bundled", "field_system", "domain", "resolution", "K", "trace_K", "tol", "seed", "checks",
    "output_dir", "strict", "method", "tolerances", "samples", "kernel_points", "volume",
}


class ConfigError(ValueError):
    pass


class CharacteristicError(RuntimeError):
    pass


@dataclass
class RunConfig:
    system: FieldSystem
    domain: DomainSpec
    resolution: tuple[int, ...]
    K: int
    trace_K: int
    tol: float = 1e-8
    seed: int = 0
    checks: tuple[str, ...] = ()
    output_dir: str | None = None
    strict: bool = False
    method: str = "auto"
    tolerances: dict = field(default_factory=dict)
    samples: tuple = ()
    kernel_points: tuple = ()
    volume: float | None = None
    name: str = ""
    H_domain: DomainSpec | None = None
    H_resolution: int = 8
    trace_reference: float | None = None

    def tolerance(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES.get(key))

    def resolved(self) -> dict:
        """Everything needed to reproduce the run, as plain JSON."""
        return {
            "name": self.name,
            "field_system": self.system.to_json(),
            "domain": self.domain.to_json(),
            "resolution": list(self.resolution),
            "K": self.K,
            "trace_K": self.trace_K,
            "tol": self.tol,
            "seed": self.seed,
            "checks": list(self.checks),
            "strict": self.strict,
            "method": self.method,
            "tolerances": dict(sorted(self.tolerances.items())),
            "samples": [[_frac_str(v) for v in p] for p in self.samples],
            "kernel_points": [[list(p), tol] for p, tol in self.kernel_points],
            "volume": self.volume,
            "backend": _kernels.backend(),
        }


def _frac_str(v) -> str:
    f = Fraction(v)
    return f"{f.numerator}/{f.denominator}"


def _parse_point(p):
    return tuple(Fraction(str(v)) for v in p)


def load_config(data: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a config document (plus command-line overrides) into a RunConfig."""
    data = dict(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    name = data.get("bundled")
    try:
        if name is not None:
            if name not in BUNDLED:
                raise ConfigError(f"unknown bundled system {name!r}; choose from {sorted(BUNDLED)}")
            b = bundled(name)
            base = dict(
                system=b.system, domain=b.domain, resolution=b.resolution, K=b.K, trace_K=b.trace_K,
                checks=b.checks, samples=b.samples, kernel_points=b.kernel_points, volume=b.volume,
                H_domain=b.H_domain, H_resolution=b.H_resolution,
                tolerances=dict(b.extra.get("tolerances", {})), trace_reference=b.extra.get("trace_reference"),
            )
            if "field_system" in data or "domain" in data:
                raise ConfigError("give either 'bundled' or 'field_system'/'domain', not both")
        else:
            if "field_system" not in data or "domain" not in data:
                raise ConfigError("config needs 'bundled' or both 'field_system' and 'domain'")
            system = FieldSystem.from_json(data["field_system"])
            domain = DomainSpec.from_json(data["domain"])
            res = data.get("resolution", data["domain"].get("resolution"))
            if res is None:
                raise ConfigError("resolution is required")
            base = dict(system=system, domain=domain, resolution=res, K=data.get("K", 50), trace_K=None,
                        checks=("indices", "H", "thm2", "thm4"), samples=(), kernel_points=(), volume=None,
                        H_domain=None, H_resolution=8, tolerances={}, trace_reference=None)
        res = data.get("resolution", base["resolution"])
        if isinstance(res, (int, np.integer)):
            res = (int(res),) * base["domain"].dim
        res = tuple(int(r) for r in res)
        if len(res) != base["domain"].dim:
            raise ConfigError(f"resolution {res} does not match dimension {base['domain'].dim}")
        K = int(data.get("K", base["K"]))
        trace_K = data.get("trace_K", base["trace_K"])
        trace_K = max(K, int(trace_K)) if trace_K is not None else K
        checks = tuple(data.get("checks", base["checks"]))
        bad = [c for c in checks if c not in ALL_CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; known: {list(ALL_CHECKS)}")
        tol = float(data.get("tol", 1e-8))
        if not tol > 0:
            raise ConfigError("tol must be positive")
        if K < 1:
            raise ConfigError("K must be >= 1")
        tolerances = dict(base["tolerances"])
        tolerances.update({k: float(v) for k, v in data.get("tolerances", {}).items()})
        samples = tuple(_parse_point(p) for p in data["samples"]) if "samples" in data else base["samples"]
        kernel_points = base["kernel_points"]
        if "kernel_points" in data:
            kernel_points = tuple((tuple(float(x) for x in p), float(t)) for p, t in data["kernel_points"])
        if base["system"].dim != base["domain"].dim:
            raise ConfigError("field system and domain dimensions differ")
        return RunConfig(
            system=base["system"], domain=base["domain"], resolution=res, K=K, trace_K=trace_K, tol=tol,
            seed=int(data.get("seed", 0)), checks=checks, output_dir=data.get("output_dir"),
            strict=bool(data.get("strict", False)), method=str(data.get("method", "auto")),
            tolerances=tolerances, samples=samples, kernel_points=kernel_points,
            volume=data.get("volume", base["volume"]), name=name or base["system"].name,
            H_domain=base["H_domain"], H_resolution=base["H_resolution"], trace_reference=base["trace_reference"],
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


# -- analysis ---------------------------------------------------------------------


def default_samples(domain: DomainSpec, per_axis: int = 4) -> list[tuple[Fraction, ...]]:
    """Rational points inside Ω on the half-step lattice of a coarse box grid, plus 0 per axis.

    Degeneracy loci of polynomial fields are algebraic and often sit on
    coordinate hyperplanes; cell centers alone can miss them entirely.
    """
    axes = []
    for lo, hi in domain.box:
        vals = {lo + (hi - lo) * Fraction(k, 2 * per_axis) for k in range(1, 2 * per_axis)}
        if lo < 0 < hi:
            vals.add(Fraction(0))
        axes.append(sorted(vals))
    pts = list(itertools.product(*axes))
    if domain.mask is None:
        return pts
    inside = domain.mask.evaluate_array(np.array([[float(v) for v in p] for p in pts])) < 0
    return [p for p, ok in zip(pts, inside) if ok]


def fields_analyze(cfg: RunConfig) -> dict:
    basis = enumerate_commutators(cfg.system)
    samples = list(cfg.samples) or default_samples(cfg.domain)
    nu_tilde, in_H = metivier_index(basis, samples)
    per_point = []
    agree = True
    for x, h in zip(samples, in_H):
        pi = point_indices(basis, x)
        nd = nu_via_determinants(basis, x)
        agree &= nd == pi.nu
        per_point.append({"x": [_frac_str(v) for v in x], "layer_dims": list(pi.layer_dims), "nu": pi.nu, "nu_det": nd})
    M = metivier_condition_check(basis, samples)
    H = measure_H(basis, cfg.H_domain or cfg.domain, nu_tilde, cfg.H_resolution)
    out = {
        "system": cfg.name,
        "n": cfg.system.dim,
        "Q": cfg.system.hormander_bound,
        "nu_tilde": nu_tilde,
        "nu_agree": bool(agree),
        "metivier_layers_constant": M,
        "metivier_condition": bool(all(M)),
        "points": per_point,
        "H": {"resolutions": list(H.resolutions), "fractions": list(H.fractions), "verdict": H.verdict},
    }
    A = condition_A_integral(cfg.system, cfg.domain)
    out["conditionA"] = {
        "verdict": A.verdict,
        "numerical_verdict": A.numerical_verdict,
        "source": A.source,
        "decay_exponent": A.decay_exponent,
        "zero_fraction": A.zero_fraction,
        "integrals": list(A.integrals),
    }
    if cfg.domain.mask is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CharacteristicWarning)
            rep = characteristic_check(cfg.domain, cfg.system)
        out["characteristic"] = {
            "min_normal_component": rep.min_normal_component,
            "at_point": list(rep.at_point),
            "characteristic": rep.characteristic,
        }
    return out


def _analysis_records(cfg: RunConfig, an: dict) -> list:
    recs = []
    if "indices" in cfg.checks:
        recs.append(ck.record("indices", an["nu_agree"], {"nu_tilde": an["nu_tilde"], "metivier": an["metivier_condition"]},
                              0, {"samples": len(an["points"])}))
    if "H" in cfg.checks:
        recs.append(ck.record("H", an["H"]["verdict"] != "inconclusive", an["H"], {"decay": 1.8, "stable_rtol": 0.1}))
    if "conditionA" in cfg.checks:
        A = an["conditionA"]
        recs.append(ck.record("conditionA", A["verdict"] == A["numerical_verdict"], A, {"decay_exponent": 0.05}))
    if "characteristic" in cfg.checks and "characteristic" in an:
        c = an["characteristic"]
        recs.append(ck.record("characteristic", not c["characteristic"], c, 1e-6))
    return recs


# -- pipeline -----------------------------------------------------------------------


def _box_laplacian_values(domain: DomainSpec, K: int) -> np.ndarray:
    widths = [float(hi - lo) for lo, hi in domain.box]
    m = int(math.ceil(math.sqrt(K))) + 4
    grids = np.meshgrid(*[np.arange(1, m + 1)] * len(widths), indexing="ij")
    vals = sum((math.pi * g / w) ** 2 for g, w in zip(grids, widths))
    return np.sort(vals.ravel())[:K]


def solve(cfg: RunConfig, op, K: int | None = None) -> Spectrum:
    K = K or cfg.trace_K
    if K > op.matrix.shape[0] // 4:
        raise ConfigError(f"K={K} exceeds a quarter of the {op.matrix.shape[0]} interior nodes; raise the resolution")
    return smallest_k(op, K, cfg.tol, cfg.seed, cfg.method)


def spectral_records(cfg: RunConfig, spec: Spectrum, an: dict, grid=None, out_dir: Path | None = None) -> list:
    """All requested spectral checks; ``spec`` holds trace_K pairs, the first K feed k-indexed checks."""
    nu_tilde = an["nu_tilde"]
    n = cfg.system.dim
    head = spec.truncated(cfg.K)
    lo, hi = heat._weyl_indices(cfg.K, heat.WEYL_RANGE)
    # Weyl fits need MIN_WEYL_POINTS inside the window; a short head defers to the full solve
    weyl_src = head if hi - lo + 1 >= heat.MIN_WEYL_POINTS else spec
    recs = []
    volume = cfg.volume if cfg.volume is not None else (cfg.domain.box_volume if cfg.domain.mask is None else None)
    want = cfg.checks

    if "eigenvalues" in want:
        exact = _box_laplacian_values(cfg.domain, cfg.K)
        rel = np.abs(head.values / exact - 1.0)
        tol = cfg.tolerance("eigenvalues")
        recs.append(ck.record("eigenvalues", bool(np.all(rel <= tol)), {"max_rel_error": float(rel.max()),
                              "values": head.values.tolist()}, tol, {"K": cfg.K}))
    if "weyl" in want:
        recs.append(_safe("weyl", lambda: ck.weyl_check(weyl_src, nu_tilde / 2.0, cfg.tolerance("weyl"))))
    if "trace" in want:
        recs.append(_safe("trace", lambda: ck.trace_check(spec, -nu_tilde / 2.0, cfg.tolerance("trace"))))
    if "tauberian" in want:
        recs.append(_safe("tauberian", lambda: ck.tauberian_consistency(spec, nu_tilde, cfg.trace_reference, weyl_spec=weyl_src)))
    if "thm2" in want:
        recs.append(ck.check_thm2(head, nu_tilde))
    if "thm4" in want:
        recs.append(_safe("thm4", lambda: ck.check_thm4(head, n)))
    if "thm5" in want:
        try:
            recs.append(ck.check_thm5(head, n, an["conditionA"]["verdict"]))
        except ck.ConditionARefused as exc:
            recs.append(ck.record("thm5", True, {"status": "refused", "reason": str(exc)}, None, {"n": n}))
    if "growth" in want:
        recs.append(ck.growth_check(head, n, cfg.tolerance("growth")))
    if "hansson_laptev" in want and volume is not None:
        recs.append(ck.hansson_laptev_bound(spec, (n - 1) // 2, volume))
    if "heisenberg_lower" in want and volume is not None:
        recs.append(ck.heisenberg_explicit_lower(spec, (n - 1) // 2, volume))
    if "grushin_log" in want:
        recs.append(_safe("grushin_log", lambda: ck.grushin_log_bound(head)))
    if spec.vectors is not None and grid is not None:
        if "supnorm" in want:
            recs.append(ck.supnorm_growth(spec, nu_tilde, grid.volume_element, volume))
        if "kernel" in want:
            basis = enumerate_commutators(cfg.system)
            for point, tol in cfg.kernel_points:
                node = grid.nearest_row(point)
                x = grid.exact_node(node) if cfg.system.exact else tuple(float(v) for v in grid.nodes[node])
                nu_x = point_indices(basis, x).nu
                label = ",".join(f"{v:g}" for v in point)

                def run(node=node, nu_x=nu_x, tol=tol, label=label):
                    ks = heat.diagonal_kernel(spec, grid, node, span=4.0)
                    if out_dir is not None:
                        ks.to_csv(out_dir / f"kernel_{label.replace(',', '_')}.csv")
                    return ck.kernel_slope_check(ks, -nu_x / 2.0, tol, label)

                recs.append(_safe(f"kernel[{label}]", run, "kernel"))
        if "thm1" in want:
            def run_thm1():
                rows = np.linspace(0, grid.size - 1, 24).round().astype(int)
                kernels = [heat.diagonal_kernel(spec, grid, int(r)) for r in rows]
                return ck.check_thm1_uniform_bound(kernels, nu_tilde)

            recs.append(_safe("thm1_uniform_bound", run_thm1))
    return recs


def _safe(name: str, fn, anchor_key: str | None = None):
    """Run a check; a missing window or too-short spectrum becomes a failed record."""
    try:
        return fn()
    except (heat.WindowError, ValueError) as exc:
        key = anchor_key or name
        return ck.record(name, False, {"error": str(exc)}, None, {}, anchor_key=key if key in ck.ANCHORS else name)


def run_pipeline(cfg: RunConfig, out_dir: Path | None = None) -> tuple[ck.VerificationReport, int]:
    an = fields_analyze(cfg)
    if cfg.strict and an.get("characteristic", {}).get("characteristic"):
        raise CharacteristicError(f"characteristic boundary near {an['characteristic']['at_point']}")
    report = ck.VerificationReport(config=cfg.resolved(), meta={"analysis": an})
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    for r in _analysis_records(cfg, an):
        report.add(r)
    grid = build_grid(cfg.domain, cfg.resolution)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        op = assemble_operator(cfg.system, grid)
    spec = solve(cfg, op)
    report.meta["grid"] = grid.metadata()
    report.meta["solver"] = {"method": spec.method, "max_residual": float(spec.residuals.max())}
    for r in spectral_records(cfg, spec, an, grid, out_dir):
        report.add(r)
    if out_dir is not None:
        spec.to_csv(out_dir / "spectrum.csv")
        try:
            heat.heat_trace(spec).to_csv(out_dir / "trace.csv")
        except heat.WindowError:
            pass
        report.dump(out_dir / "report.json")
    return report, EXIT_OK if report.passed else EXIT_FAIL


# -- command line --------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hormander", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("analyze", "bracket indices, H and condition (A); no assembly"),
        ("assemble", "write the sparse operator as 'row col value' text"),
        ("eigs", "lowest eigenpairs as CSV"),
        ("trace", "heat trace samples as CSV"),
        ("verify", "spectral checks, report JSON"),
        ("run", "full pipeline with all artifacts"),
    ):
        s = sub.add_parser(name, help=help_)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="JSON run configuration")
        src.add_argument("--bundled", choices=sorted(BUNDLED), help="bundled system name")
        s.add_argument("--resolution", type=int, nargs="+")
        s.add_argument("-k", "--K", dest="K", type=int)
        s.add_argument("--trace-k", dest="trace_K", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--method", choices=["auto", "lobpcg", "shift-invert"])
        s.add_argument("--checks", nargs="+")
        s.add_argument("--strict", action="store_true", default=None)
        s.add_argument("--out", type=Path, help="output directory (or file for assemble/eigs/trace)")
        if name in ("trace", "verify"):
            s.add_argument("--spectrum", type=Path, help="reuse a spectrum CSV instead of solving")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config_from_args(args) -> RunConfig:
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    else:
        data = {"bundled": args.bundled}
    res = args.resolution
    if res is not None and len(res) == 1:
        res = res[0]
    overrides = {"resolution": res, "K": args.K, "trace_K": args.trace_K, "seed": args.seed, "tol": args.tol,
                 "method": args.method, "checks": args.checks, "strict": args.strict}
    return load_config(data, overrides)


def _emit(text: str, out: Path | None, default_name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = out / default_name if out.suffix == "" else out
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config_from_args(args)
        out = args.out
        if args.command == "analyze":
            an = fields_analyze(cfg)
            if cfg.strict and an.get("characteristic", {}).get("characteristic"):
                raise CharacteristicError("characteristic boundary")
            _emit(json.dumps(ck._jsonable(an), indent=2, sort_keys=True) + "\n", out, "analysis.json")
            return EXIT_OK
        if args.command == "run":
            report, code = run_pipeline(cfg, out)
            if out is None:
                sys.stdout.write(report.dumps() + "\n")
            for c in report.checks:
                log.info("%-24s %s", c.name, "PASS" if c.passed else "FAIL")
            return code
        grid = build_grid(cfg.domain, cfg.resolution)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            op = assemble_operator(cfg.system, grid)
        if args.command == "assemble":
            path = (out / "operator.txt") if out is not None and out.suffix == "" else out
            if path is None:
                dump_matrix(op.matrix, sys.stdout)
            else:
                path.parent.mkdir(parents=True, exist_ok=True)
                op.dump(path)
            return EXIT_OK
        spectrum_path = getattr(args, "spectrum", None)
        if spectrum_path is not None:
            spec = Spectrum.from_csv(spectrum_path)
        else:
            K = cfg.K if args.command == "eigs" else cfg.trace_K
            spec = solve(cfg, op, K)
        if args.command == "eigs":
            path = (out / "spectrum.csv") if out is not None and out.suffix == "" else out
            if path is None:
                path = Path("/dev/stdout")
            spec.to_csv(path)
            return EXIT_OK
        if args.command == "trace":
            tr = heat.heat_trace(spec)
            path = (out / "trace.csv") if out is not None and out.suffix == "" else out
            tr.to_csv(path if path is not None else Path("/dev/stdout"))
            return EXIT_OK
        # verify
        an = fields_analyze(cfg)
        report = ck.VerificationReport(config=cfg.resolved())
        for r in _analysis_records(cfg, an):
            report.add(r)
        for r in spectral_records(cfg, spec, an, grid if spec.vectors is not None else None):
            report.add(r)
        _emit(report.dumps() + "\n", out, "report.json")
        return EXIT_OK if report.passed else EXIT_FAIL
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CharacteristicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHARACTERISTIC
    except EigenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EIGEN
    except (GridError, HormanderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
