import argparse
import logging
import os.path
import sys
import time
from dataclasses import dataclass, field
from typing import (
    List,
    Mapping,
    Union,
    Optional,
    Sequence,
    Dict,
    Any,
    Callable,
)

from . import constructions
from .algebra import IceQP, VARIANTS, load_qp
from .boundary import (
    BoundaryError,
    BoundaryProfile,
    Verdict,
    boundary_profile,
    check_presentation,
    compare_profiles,
    load_presentation,
    oracle_check,
    orbit_check,
    variant_agreement,
)
from .construct import standard_triangulation, known_kinds
from .mutation import mutate
from .quiver import Quiver, QuiverError
from .rewriting import (
    MonomialOrder,
    RewriteError,
    RewriteSystem,
    frozen_relations,
    jacobian_system,
    normal_basis,
)
from .surface import (
    QP_VARIANTS,
    ALL_EXTERNAL,
    SurfaceError,
    Triangulation,
    build_ice_qp,
    flip,
    load_triangulation,
)
from .utils import DEFAULT_DEGREE, dump_json, fmt_elapsed, load_json, write_text


LOG_FORMAT: str = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"
LOG_DATEFORMAT: str = "%Y-%m-%d %H:%M:%S"

EXIT_OK: int = 0
EXIT_ERROR: int = 1
EXIT_DISCREPANCY: int = 2


logger: logging.Logger = logging.getLogger(__package__)


class CommaSplitArgs(argparse.Action):
    """
    Converter for command line arguments passed as comma-separated lists of values
    """

    def __call__(
        self,
        parser: argparse.ArgumentParser,
        namespace: argparse.Namespace,
        values: Union[str, Sequence, None],
        option_string: Optional[str] = None,
    ) -> None:
        values = values.split(",") if isinstance(values, str) else values
        setattr(namespace, self.dest, values)


def setup_logger(verbosity: int) -> None:
    log_formatter: logging.Formatter = logging.Formatter(
        fmt=LOG_FORMAT, datefmt=LOG_DATEFORMAT
    )
    stream_handler: logging.StreamHandler = logging.StreamHandler()
    stream_handler.setFormatter(log_formatter)
    logger.addHandler(stream_handler)
    levels: Mapping[int, int] = {
        0: logging.WARNING,
        1: logging.INFO,
        2: logging.DEBUG,
        3: logging.NOTSET,
    }
    verbosity = min(max(min(levels), verbosity), max(levels))
    logger.setLevel(levels[verbosity])


def parse_options(options: Optional[Sequence[str]]) -> Dict[str, Any]:
    """``KEY=VALUE`` pairs; integer-looking values become ints"""
    parsed: Dict[str, Any] = {}
    for option in options or []:
        if "=" not in option:
            raise ValueError(f"Option {option!r} is not in the KEY=VALUE form")
        key, value = option.split("=", 1)
        parsed[key.strip()] = int(value) if value.strip().lstrip("-").isdigit() else value
    return parsed


@dataclass
class SessionConfig:
    degree: int = DEFAULT_DEGREE
    variant: Optional[str] = None
    weights: Dict[str, int] = field(default_factory=dict)
    precedence: List[str] = field(default_factory=list)
    output: Optional[str] = None
    report_format: str = "json"
    dry_run: bool = False

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"The truncation degree must be at least 1, got {self.degree}")
        if self.variant is not None and self.variant not in VARIANTS:
            raise ValueError(f"Unknown ideal variant {self.variant!r}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "SessionConfig":
        weights: Dict[str, int] = {}
        precedence: List[str] = []
        if args.weights:
            data: Mapping[str, Any] = load_json(args.weights)
            weights = {str(k): int(v) for k, v in data.get("weights", {}).items()}
            precedence = [str(a) for a in data.get("precedence", [])]
        return cls(
            degree=args.degree,
            variant=args.variant,
            weights=weights,
            precedence=precedence,
            output=args.output,
            report_format=args.format,
            dry_run=args.dry_run,
        )

    def order(self, qp: IceQP) -> MonomialOrder:
        return MonomialOrder.for_qp(qp, self.weights or None, self.precedence or None)

    def system(self, qp: IceQP) -> RewriteSystem:
        return jacobian_system(qp, self.degree, self.variant, self.order(qp))

    def emit(self, document: Any, text: Optional[str] = None) -> None:
        rendered: str = (
            dump_json(document) if self.report_format == "json" or text is None else text
        )
        if self.output and not self.dry_run:
            write_text(self.output, rendered)
            logger.info(f"Written {self.output}")
        else:
            if self.output:
                logger.info(f"Dry run, not writing {self.output}")
            sys.stdout.write(rendered)


def load_source(args: argparse.Namespace) -> Triangulation:
    if args.kind:
        return standard_triangulation(args.kind, **parse_options(args.options))
    if not args.source:
        raise ValueError(
            f"Give a triangulation file or --kind (known: {', '.join(known_kinds())})"
        )
    return load_triangulation(args.source)


def _verdict_exit(verdict: Verdict) -> int:
    return EXIT_OK if verdict.passed else EXIT_DISCREPANCY


def run_build(args: argparse.Namespace, config: SessionConfig) -> int:
    T: Triangulation = load_source(args)
    qp: IceQP = build_ice_qp(T, args.qp_variant)
    logger.info(
        f"Built QP with {len(qp.quiver.vertices)} vertices and {len(qp.quiver.arrows)} arrows"
    )
    config.emit(qp.to_json(), str(qp.potential) + "\n")
    return EXIT_OK


def run_mutate(args: argparse.Namespace, config: SessionConfig) -> int:
    qp: IceQP = load_qp(args.qp)
    mutated, report = mutate(qp, args.vertex, config.degree, config.variant)
    if config.output:
        config.emit(mutated.to_json())
        sys.stdout.write(dump_json(report.to_json()))
    else:
        config.emit(
            {"qp": mutated.to_json(), "report": report.to_json()},
            str(mutated.potential) + "\n",
        )
    return EXIT_OK


def run_flip(args: argparse.Namespace, config: SessionConfig) -> int:
    T: Triangulation = load_source(args)
    flipped: Triangulation = flip(T, args.arc)
    config.emit(flipped.to_json())
    return EXIT_OK


def run_relations(args: argparse.Namespace, config: SessionConfig) -> int:
    qp: IceQP = load_qp(args.qp)
    relations = frozen_relations(qp, config.variant)
    config.emit(
        {
            "variant": config.variant or qp.default_variant,
            "relations": [r.to_json() for r in relations],
        },
        "".join(f"{r.name}: {r.element}\n" for r in relations),
    )
    return EXIT_OK


def run_basis(args: argparse.Namespace, config: SessionConfig) -> int:
    qp: IceQP = load_qp(args.qp)
    rs: RewriteSystem = config.system(qp)
    if args.pair:
        i, j = args.pair
        words = normal_basis(rs, i, j, config.degree)
        config.emit(
            {
                "source": i,
                "target": j,
                "certificate_degree": config.degree,
                "variant": config.variant or qp.default_variant,
                "basis": [list(w) for w in words],
            },
            "".join((".".join(w) or f"e{i}") + "\n" for w in words),
        )
        return EXIT_OK
    profile: BoundaryProfile = boundary_profile(qp, config.degree, config.variant, system=rs)
    config.emit(
        profile.to_json(),
        "".join(
            f"{i} -> {j}: {list(profile.counts(i, j))}\n"
            for i in profile.frozen_vertices
            for j in profile.frozen_vertices
        ),
    )
    return EXIT_OK


def run_compare(args: argparse.Namespace, config: SessionConfig) -> int:
    a: BoundaryProfile = BoundaryProfile.from_json(load_json(args.first))
    b: BoundaryProfile = BoundaryProfile.from_json(load_json(args.second))
    verdict: Verdict = compare_profiles(a, b)
    config.emit(verdict.to_json(), str(verdict) + "\n")
    return _verdict_exit(verdict)


def run_orbit_check(args: argparse.Namespace, config: SessionConfig) -> int:
    T: Triangulation = load_source(args)
    report = orbit_check(T, config.degree, args.max_size, witnesses=not args.no_witnesses)
    config.emit(report.to_json(), report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_DISCREPANCY


def run_oracle_check(args: argparse.Namespace, config: SessionConfig) -> int:
    T: Triangulation
    if args.kind or args.source:
        T = load_source(args)
    else:
        T = standard_triangulation("polygon", n=args.n, p=args.p)
    verdict: Verdict = oracle_check(T, args.n, args.p, config.degree)
    config.emit(verdict.to_json(), str(verdict) + "\n")
    return _verdict_exit(verdict)


def run_variant_check(args: argparse.Namespace, config: SessionConfig) -> int:
    T: Triangulation = load_source(args)
    report = variant_agreement(T, config.degree)
    config.emit(
        report.to_json(),
        f"primary: {report.primary}\nmixed: {report.mixed}\n",
    )
    return _verdict_exit(report.primary)


def run_presentation_check(args: argparse.Namespace, config: SessionConfig) -> int:
    presentation = load_presentation(args.presentation)
    checks = check_presentation(presentation, N=config.degree, variant=config.variant)
    failed: bool = any(not c.passed for c in checks)
    config.emit(
        {
            "status": "fail" if failed else "pass",
            "certificate_degree": config.degree,
            "variant": config.variant,
            "relations": [c.to_json() for c in checks],
        },
        "".join(f"{c.name}: {'ok' if c.passed else c.residue or 'unchecked'}\n" for c in checks),
    )
    return EXIT_DISCREPANCY if failed else EXIT_OK


def run_export_dot(args: argparse.Namespace, config: SessionConfig) -> int:
    name: str = os.path.splitext(os.path.basename(args.input))[0] if args.input else args.kind
    quiver: Quiver
    if args.kind:
        T: Triangulation = standard_triangulation(args.kind, **parse_options(args.options))
        quiver = build_ice_qp(T, args.qp_variant).quiver
    else:
        data: Mapping[str, Any] = load_json(args.input)
        if "triangles" in data:
            quiver = build_ice_qp(load_triangulation(args.input), args.qp_variant).quiver
        elif "quiver" in data:
            quiver = load_qp(args.input).quiver
        else:
            quiver = Quiver.from_json(data)  # type: ignore
    text: str = quiver.to_dot(name)
    config.emit(text, text)
    return EXIT_OK


RUNNERS: Mapping[str, Callable[[argparse.Namespace, SessionConfig], int]] = {
    "build": run_build,
    "mutate": run_mutate,
    "flip": run_flip,
    "relations": run_relations,
    "basis": run_basis,
    "compare": run_compare,
    "orbit-check": run_orbit_check,
    "oracle-check": run_oracle_check,
    "variant-check": run_variant_check,
    "presentation-check": run_presentation_check,
    "export-dot": run_export_dot,
}


def build_parser() -> argparse.ArgumentParser:
    general_parser = argparse.ArgumentParser(add_help=False)
    general_parser.add_argument(
        "-v",
        "--verbose",
        dest="verbosity",
        default=-1,
        action="count",
        help="Increase verbosity (can be repeated)",
    )
    general_parser.add_argument(
        "-n",
        "--dry-run",
        action="store_true",
        help="Print results instead of writing the output file",
    )
    general_parser.add_argument(
        "-N",
        "--degree",
        type=int,
        default=DEFAULT_DEGREE,
        help=f"Truncation degree of every computation (default {DEFAULT_DEGREE})",
    )
    general_parser.add_argument(
        "--variant",
        choices=VARIANTS,
        help="Ideal variant (default: exclude-Y-only with external arrows, else not-both-frozen)",
    )
    general_parser.add_argument(
        "--weights",
        metavar="FILE",
        help='JSON file with {"weights": {arrow: int}, "precedence": [arrow, ...]}',
    )
    general_parser.add_argument(
        "--format", choices=("json", "text"), default="json", help="Report format"
    )
    general_parser.add_argument("-o", "--output", metavar="FILE", help="Output file")

    surface_parser = argparse.ArgumentParser(add_help=False)
    surface_parser.add_argument("source", nargs="?", help="Triangulation JSON file")
    surface_parser.add_argument(
        "-k", "--kind", help="Standard triangulation kind instead of a file"
    )
    surface_parser.add_argument(
        "--options",
        nargs="*",
        metavar="OPTION=VALUE",
        help="Parameters of the standard triangulation",
    )
    surface_parser.add_argument(
        "-cp",
        "--constructions-paths",
        action=CommaSplitArgs,
        help="comma-separated list of paths where to look for constructions",
    )

    variant_parser = argparse.ArgumentParser(add_help=False)
    variant_parser.add_argument(
        "--qp-variant",
        choices=QP_VARIANTS,
        default=ALL_EXTERNAL,
        help="Which boundary points get an external arrow",
    )

    qp_parser = argparse.ArgumentParser(add_help=False)
    qp_parser.add_argument("qp", help="Ice QP JSON file")

    main_parser: argparse.ArgumentParser = argparse.ArgumentParser(prog="boundary_qp")
    subparsers = main_parser.add_subparsers(
        title="mode",
        dest="mode",
        required=True,
        help="Action to perform",
    )
    subparsers.add_parser(
        "build",
        help="Build the ice QP of a triangulation",
        parents=[general_parser, surface_parser, variant_parser],
    )
    mutate_parser = subparsers.add_parser(
        "mutate", help="Mutate an ice QP at a vertex", parents=[general_parser, qp_parser]
    )
    mutate_parser.add_argument("vertex", help="Mutable vertex")
    flip_parser = subparsers.add_parser(
        "flip", help="Flip an arc of a triangulation", parents=[general_parser, surface_parser]
    )
    flip_parser.add_argument("--arc", required=True, help="Arc to flip")
    subparsers.add_parser(
        "relations",
        help="List the frozen Jacobian relations",
        parents=[general_parser, qp_parser],
    )
    basis_parser = subparsers.add_parser(
        "basis",
        help="Boundary profile (or normal basis between two vertices)",
        parents=[general_parser, qp_parser],
    )
    basis_parser.add_argument(
        "--pair", nargs=2, metavar=("SOURCE", "TARGET"), help="List the normal basis words"
    )
    compare_parser = subparsers.add_parser(
        "compare", help="Compare two boundary profiles", parents=[general_parser]
    )
    compare_parser.add_argument("first", help="Profile JSON file")
    compare_parser.add_argument("second", help="Profile JSON file")
    orbit_parser = subparsers.add_parser(
        "orbit-check",
        help="Sweep the flip orbit of a triangulation",
        parents=[general_parser, surface_parser],
    )
    orbit_parser.add_argument("--max-size", type=int, default=100, help="Orbit size cap")
    orbit_parser.add_argument(
        "--no-witnesses", action="store_true", help="Only compare profiles"
    )
    oracle_parser = subparsers.add_parser(
        "oracle-check",
        help="Compare a polygon triangulation with the doubled-cycle presentation",
        parents=[general_parser, surface_parser],
    )
    oracle_parser.add_argument("--n", type=int, required=True, help="The polygon has n+3 sides")
    oracle_parser.add_argument("--p", type=int, default=0, help="Number of punctures")
    subparsers.add_parser(
        "variant-check",
        help="Compare the ideal variants on a triangulation",
        parents=[general_parser, surface_parser],
    )
    presentation_parser = subparsers.add_parser(
        "presentation-check",
        help="Check a presentation file against the computed algebra",
        parents=[general_parser],
    )
    presentation_parser.add_argument("presentation", help="Presentation JSON file")
    dot_parser = subparsers.add_parser(
        "export-dot",
        help="Export a quiver, ice QP or triangulation quiver as DOT",
        parents=[general_parser, variant_parser],
    )
    dot_parser.add_argument("input", nargs="?", help="Quiver, ice QP or triangulation file")
    dot_parser.add_argument("-k", "--kind", help="Standard triangulation kind instead of a file")
    dot_parser.add_argument("--options", nargs="*", metavar="OPTION=VALUE")
    dot_parser.add_argument("-cp", "--constructions-paths", action=CommaSplitArgs)
    return main_parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args: argparse.Namespace = build_parser().parse_args(argv)

    constructions_paths: List[str] = [os.path.join(os.getcwd(), "constructions")]
    constructions_paths.extend(getattr(args, "constructions_paths", None) or [])
    constructions.__path__ += [p for p in constructions_paths if p not in constructions.__path__]
    constructions.import_constructions()

    if args.mode not in RUNNERS:
        raise NotImplementedError

    verbosity: int = args.verbosity
    if verbosity == -1:
        verbosity = 1 if args.mode in ("orbit-check", "oracle-check") else 0
    if not logger.handlers:
        setup_logger(verbosity)
    else:
        logger.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))

    started: float = time.monotonic()
    try:
        config: SessionConfig = SessionConfig.from_args(args)
        status: int = RUNNERS[args.mode](args, config)
    except (QuiverError, SurfaceError, RewriteError, BoundaryError) as exc:
        logger.error(f"{exc.__class__.__name__}: {exc}")
        return EXIT_ERROR
    except (OSError, ValueError, KeyError) as exc:
        logger.error(f"Cannot run {args.mode}: {exc}")
        return EXIT_ERROR
    logger.info(f"{args.mode} finished in {fmt_elapsed(time.monotonic() - started)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
