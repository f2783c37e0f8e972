"""Command-line entry point: ``twistorkit <command> ...``.

JSON goes to stdout (sorted keys), a markdown summary to stderr. Exit codes:
0 success, 1 failed check or domain error, 2 usage or configuration error,
3 schema error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from twistorkit import bundles, deformation, hypercomplex, quaternionic, twistor_flat
from twistorkit.config import configure_logging, load_config
from twistorkit.errors import CheckFailed, NotReal, TwistorkitError, UsageError
from twistorkit.jsonio import (
    decode_bundle,
    decode_bundle_family,
    decode_matrix,
    decode_section,
    decode_twistor_data,
    document,
    dumps,
    encode_laurent,
    encode_scalar,
    encode_section,
    encode_twistor_data,
    load_document,
    matrix_payload,
    parse_scalar_text,
    to_jsonable,
    write_document,
)
from twistorkit.reports import deformation_table, key_value_table, print_summary, residual_table
from twistorkit.rng import SplitMix64
from twistorkit.scalars import Backend, format_scalar, get_backend

logger = logging.getLogger(__name__)

EXACT_ONLY = {"split", "cohomology", "deform"}


@dataclass
class RunConfig:
    command: str
    backend: Backend
    seed: int
    samples: int
    workers: int = 1
    progress: bool = False
    tolerances: dict = field(default_factory=dict)
    cohomology: dict = field(default_factory=dict)
    args: argparse.Namespace = field(default_factory=argparse.Namespace)

    @property
    def tol(self) -> float:
        return self.tolerances.get("float_residual", 1e-10)


def _scalar_list(text: str, backend: Backend) -> list:
    return [parse_scalar_text(part.strip(), backend) for part in text.split(",") if part.strip()]


def _add_common(parser: argparse.ArgumentParser, samples: bool = True) -> None:
    parser.add_argument("--backend", choices=["exact", "float"], default=None)
    parser.add_argument("--seed", type=int, default=None)
    if samples:
        parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--progress", action="store_true", default=None)
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twistorkit",
        description="Bundles on CP^1, twistor data and hyperkaehler recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="splitting type of a bundle")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--window", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("cohomology", help="h0, h1 and splitting of E(m)")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--twist", type=int, default=0)
    p.add_argument("--basis", action="store_true", help="include the canonical section basis")
    _add_common(p)

    p = sub.add_parser("quat-check", help="validate a quaternionic matrix A")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--P", dest="change", type=Path, default=None, help="change of trivialization")
    _add_common(p)

    p = sub.add_parser("real-section", help="apply r to a section and test whether it is real")
    p.add_argument("--matrix", type=Path, default=None, help="quaternionic matrix A")
    p.add_argument("--section", type=Path, default=None, help="section_ab document")
    p.add_argument("--x", default=None, help="comma-separated scalars; flat real section through (x, y)")
    p.add_argument("--y", default=None, help="comma-separated scalars")
    _add_common(p)

    tw = sub.add_parser("twistor", help="flat twistor space")
    tw_sub = tw.add_subparsers(dest="action", required=True)
    p = tw_sub.add_parser("build", help="twistor data of flat C^2n")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    _add_common(p)
    p = tw_sub.add_parser("check", help="invariant battery of the flat model")
    p.add_argument("--n", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("verify", help="hyperkaehler identities of twistor data")
    p.add_argument("--data", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("metric", help="metric and Kaehler forms on two tangent vectors")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--a", required=True, help="comma-separated scalars")
    p.add_argument("--b", required=True, help="comma-separated scalars")
    _add_common(p)

    df = sub.add_parser("deform", help="deformation families")
    df_sub = df.add_subparsers(dest="action", required=True)
    p = df_sub.add_parser("scan", help="semicontinuity scan of a bundle family")
    p.add_argument("--family", type=Path, required=True)
    p.add_argument("--special", default="0", help="comma-separated parameter point")
    p.add_argument("--samples", dest="t_samples", required=True,
                   help="parameter points separated by ';', coordinates by ','")
    p.add_argument("--twist", type=int, default=0)
    _add_common(p, samples=False)

    p = sub.add_parser("roundtrip", help="forward and inverse twistor construction")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--perturb-phase", action="store_true",
                   help="multiply Omega by (3+4i)/5 before verification")
    _add_common(p)
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge config.yaml, the environment and command-line flags."""
    config = load_config(args.config)
    configure_logging(
        {0: config["log_level"], 1: "INFO"}.get(args.verbose, "DEBUG")
    )
    backend = get_backend(args.backend or config["backend"])
    if args.command in EXACT_ONLY and not backend.exact:
        raise UsageError(f"'{args.command}' needs the exact backend")
    return RunConfig(
        command=args.command,
        backend=backend,
        seed=args.seed if args.seed is not None else config["seed"],
        samples=getattr(args, "samples", None) or config["samples"],
        workers=args.workers or config["workers"],
        progress=bool(args.progress if args.progress is not None else config["progress"]),
        tolerances=config["tolerances"],
        cohomology=config["cohomology"],
        args=args,
    )


def cmd_split(cfg: RunConfig):
    E = decode_bundle(load_document(cfg.args.bundle), cfg.backend)
    window = cfg.args.window if cfg.args.window is not None else cfg.cohomology.get("scan_window")
    split = bundles.splitting_type(E, window)
    doc = document("splitting", rank=E.rank, winding=E.winding, splitting=list(split.degrees))
    return 0, doc, key_value_table({"rank": E.rank, "winding": E.winding, "splitting": split.degrees})


def _section_doc(s: bundles.GlobalSection) -> dict:
    return {"p": [encode_laurent(c) for c in s.p], "q": [encode_laurent(c) for c in s.q]}


def cmd_cohomology(cfg: RunConfig):
    E = decode_bundle(load_document(cfg.args.bundle), cfg.backend)
    m = cfg.args.twist
    policy = cfg.cohomology.get("degree_bound_policy", "sharp")
    summary = bundles.cohomology_summary(E, m, cfg.cohomology.get("scan_window"), policy)
    summary["euler"] = bundles.euler_characteristic(bundles.twist(E, m))
    doc = document("cohomology", twist=m, **summary)
    if cfg.args.basis:
        space = bundles.section_space(
            bundles.twist(E, m),
            policy=policy,
            validate=cfg.cohomology.get("validate_degree_bound", True),
        )
        doc["basis"] = [_section_doc(s) for s in space.basis]
    return 0, doc, key_value_table(summary)


def cmd_quat_check(cfg: RunConfig):
    bk = cfg.backend
    tol = cfg.tolerances.get("quaternionic", 1e-12)
    Q = quaternionic.check_quaternionic(decode_matrix(load_document(cfg.args.matrix), bk), bk, tol)
    rng = SplitMix64(cfg.seed)
    r_identity, j_minus_identity = 0.0, 0.0
    for _ in range(cfg.samples):
        s = quaternionic.SectionAB(rng.vector(bk, Q.dim), rng.vector(bk, Q.dim), bk)
        twice = quaternionic.induced_r(Q, quaternionic.induced_r(Q, s))
        r_identity = max(r_identity, bk.max_abs(twice.a - s.a), bk.max_abs(twice.b - s.b))
        x = rng.vector(bk, Q.dim)
        j_minus_identity = max(j_minus_identity, bk.max_abs(quaternionic.apply_j(Q, quaternionic.apply_j(Q, x)) + x))
    checks = {
        "r_squared_identity": r_identity,
        "j_squared_minus_identity": j_minus_identity,
        "real_section_rank_defect": float(abs(quaternionic.real_section_constraint_rank(Q) - 2 * Q.dim)),
    }
    failures = sorted(k for k, v in checks.items() if v > (0.0 if bk.exact else cfg.tol))
    doc = document("quat_check", n=Q.n, checks=checks, failures=failures, passed=not failures)
    if cfg.args.change is not None:
        Q2 = quaternionic.change_trivialization(Q, decode_matrix(load_document(cfg.args.change), bk))
        doc["A_changed"] = matrix_payload(Q2.A, bk)
    return (0 if not failures else 1), doc, residual_table(checks, failures)


def _real_section_input(cfg: RunConfig):
    bk = cfg.backend
    args = cfg.args
    Q = None
    if args.matrix is not None:
        Q = quaternionic.check_quaternionic(
            decode_matrix(load_document(args.matrix), bk), bk, cfg.tolerances.get("quaternionic", 1e-12)
        )
    if args.section is not None:
        if Q is None:
            raise UsageError("--section needs --matrix")
        return Q, decode_section(load_document(args.section), bk)
    if args.x is None or args.y is None:
        raise UsageError("give --matrix and --section, or --x and --y")
    x, y = _scalar_list(args.x, bk), _scalar_list(args.y, bk)
    if len(x) != len(y) or not x:
        raise UsageError("--x and --y need the same nonzero number of entries")
    if Q is None:
        Q = twistor_flat.quaternionic_from_tau(len(x), bk)
    return Q, twistor_flat.real_section_from_point(x, y, bk)


def cmd_real_section(cfg: RunConfig):
    """r(s) for a section of the sum of O(1)'s and whether s is real; exits 1 when it is not."""
    Q, s = _real_section_input(cfg)
    real = quaternionic.is_real_section(Q, s, cfg.tol)
    doc = document(
        "real_section",
        real=real,
        r_of_s=encode_section(quaternionic.induced_r(Q, s)),
        section=encode_section(s),
    )
    return 0 if real else 1, doc, key_value_table({"n": Q.n, "real": real})


def cmd_twistor_build(cfg: RunConfig):
    bk = cfg.backend
    n = cfg.args.n
    hk = twistor_flat.standard_flat(n, bk)
    Omega_raw = twistor_flat.restrict_omega(hk, tol=cfg.tolerances.get("constancy", 1e-12))
    Q = twistor_flat.quaternionic_from_tau(n, bk)
    mu, Omega = hypercomplex.normalize_symplectic_phase(Omega_raw, Q)
    D = hypercomplex.TwistorData(n, Q, Omega, mu, bk)
    doc = encode_twistor_data(
        D,
        Omega_raw=matrix_payload(Omega_raw, bk),
        frames={
            "tangent": "dw^1..dw^2n, dwbar^1..dwbar^2n; pair k at (2k, 2k+1) and (2n+2k, 2n+2k+1)",
            "fiber": "interleaved pairs (x_k, y_k)",
        },
        matrices={name: matrix_payload(getattr(hk, name), bk) for name in ("I", "J", "K", "g")},
    )
    if cfg.args.out is not None:
        write_document(doc, cfg.args.out)
        logger.info("wrote twistor data to %s", cfg.args.out)
    return 0, doc, key_value_table({"n": n, "mu": format_scalar(mu, bk)})


def cmd_twistor_check(cfg: RunConfig):
    report = twistor_flat.check_battery(cfg.args.n, cfg.backend, min(cfg.samples, 100), cfg.seed, cfg.tol)
    doc = document("twistor_check", **report)
    return (0 if report["passed"] else 1), doc, residual_table(report["residuals"], report["failures"])


def _verify(cfg: RunConfig, D: hypercomplex.TwistorData) -> dict:
    tol = cfg.tolerances
    return hypercomplex.verify_suite(
        D,
        samples=cfg.samples,
        seed=cfg.seed,
        tol=tol.get("float_residual", 1e-10),
        fd_step=tol.get("fd_step", 1e-5),
        fd_tolerance=tol.get("fd_tolerance", 1e-6),
        workers=cfg.workers,
        progress=cfg.progress,
    )


def cmd_verify(cfg: RunConfig):
    D = decode_twistor_data(load_document(cfg.args.data), cfg.backend)
    report = _verify(cfg, D)
    doc = document("verify_report", **report)
    return (0 if report["passed"] else 1), doc, residual_table(report["checks"], report["failures"])


def cmd_metric(cfg: RunConfig):
    bk = cfg.backend
    D = decode_twistor_data(load_document(cfg.args.data), bk)
    a, b = _scalar_list(cfg.args.a, bk), _scalar_list(cfg.args.b, bk)
    tol = cfg.tolerances.get("metric_imag", 1e-10)
    values = {"g": hypercomplex.metric(D, a, b, tol)}
    for which in hypercomplex.STRUCTURES:
        values[f"omega_{which}"] = hypercomplex.kahler(D, which, a, b, tol)
    doc = document("metric", **{k: encode_scalar(v, bk) for k, v in values.items()})
    return 0, doc, key_value_table({k: format_scalar(v, bk) for k, v in values.items()})


def _parameter_points(text: str, backend: Backend) -> list[list]:
    return [_scalar_list(chunk, backend) for chunk in text.split(";") if chunk.strip()]


def cmd_deform_scan(cfg: RunConfig):
    bk = cfg.backend
    F = decode_bundle_family(load_document(cfg.args.family), bk)
    special = _scalar_list(cfg.args.special, bk)
    points = _parameter_points(cfg.args.t_samples, bk) if F.params > 1 else [
        [v] for v in _scalar_list(cfg.args.t_samples.replace(";", ","), bk)
    ]
    report = deformation.semicontinuity_scan(
        F, special, points, cfg.args.twist,
        window=cfg.cohomology.get("scan_window"), workers=cfg.workers, progress=cfg.progress,
    )
    doc = document("deformation_report", **report.as_dict())
    ok = report.semicontinuous and report.euler_constant
    return (0 if ok else 1), doc, deformation_table(report)


def cmd_roundtrip(n: int, seed: int, backend: Backend, cfg: RunConfig | None = None,
                  perturb_phase: bool = False):
    """Build flat twistor data, recover the hyperkaehler structure and check it.

    Returns:
        tuple: ``(exit_code, report)``; the code is 0 iff every check passes.
    """
    cfg = cfg or RunConfig("roundtrip", backend, seed, 100)
    D = hypercomplex.flat_twistor_data(n, backend)
    if perturb_phase:
        phase = backend.from_parts("3/5", "4/5")
        D = hypercomplex.TwistorData(n, D.Q, D.Omega * phase, D.mu * phase, backend)

    verify = _verify(cfg, D)
    failures = set(verify["failures"])

    gram = None
    try:
        gram = hypercomplex.metric_gram(D, cfg.tolerances.get("metric_imag", 1e-10))
        expected = backend.eye(4 * n) * backend.convert(2)
        if backend.max_abs(gram - expected) > (0.0 if backend.exact else cfg.tol):
            failures.add("metric_gram")
    except NotReal:
        failures.add("NotReal")

    rng = SplitMix64(seed)
    count = min(cfg.samples, 50)
    sections = [
        twistor_flat.real_section_from_point(rng.vector(backend, n, 3), rng.vector(backend, n, 3), backend)
        for _ in range(count)
    ]
    if not all(quaternionic.is_real_section(D.Q, s, cfg.tol) for s in sections):
        failures.add("real_sections")
    if backend.exact:
        stability = deformation.splitting_stability_scan(None, sections, progress=cfg.progress)
        if not stability["stable"]:
            failures.add("normal_bundle_splitting")
    else:
        stability = {"skipped": "normal-bundle splitting needs the exact backend"}

    report = {
        "n": n,
        "backend": backend.name,
        "seed": seed,
        "mu": D.mu,
        "A": D.Q.A,
        "Omega": D.Omega,
        "verify": verify,
        "metric_gram": gram,
        "stability": stability,
        "failures": sorted(failures),
        "passed": not failures,
    }
    return (0 if not failures else 1), report


def _run_roundtrip(cfg: RunConfig):
    code, report = cmd_roundtrip(cfg.args.n, cfg.seed, cfg.backend, cfg, cfg.args.perturb_phase)
    doc = document("roundtrip_report", **to_jsonable(report, cfg.backend))
    return code, doc, residual_table(report["verify"]["checks"], report["failures"])


HANDLERS = {
    "split": cmd_split,
    "cohomology": cmd_cohomology,
    "quat-check": cmd_quat_check,
    "real-section": cmd_real_section,
    ("twistor", "build"): cmd_twistor_build,
    ("twistor", "check"): cmd_twistor_check,
    "verify": cmd_verify,
    "metric": cmd_metric,
    ("deform", "scan"): cmd_deform_scan,
    "roundtrip": _run_roundtrip,
}


def cmd_dispatch(cfg: RunConfig) -> int:
    """Run one command and print its JSON document and summary.

    Raises:
        CheckFailed: After printing, if the command reports failed checks.
    """
    action = getattr(cfg.args, "action", None)
    handler = HANDLERS.get((cfg.command, action)) or HANDLERS.get(cfg.command)
    if handler is None:
        raise UsageError(f"unknown command {cfg.command!r}")
    code, doc, summary = handler(cfg)
    print(dumps(to_jsonable(doc, cfg.backend)))
    print_summary(summary)
    if code:
        raise CheckFailed(doc.get("failures") or [cfg.command])
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = build_run_config(args)
        return cmd_dispatch(cfg)
    except CheckFailed as e:
        # the report is already on stdout
        print(f"{e.name}: {e}", file=sys.stderr)
        return e.exit_code
    except TwistorkitError as e:
        print(dumps({"error": e.name, "message": str(e)}))
        print(f"{e.name}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
