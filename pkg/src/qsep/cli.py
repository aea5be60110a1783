"""Command-line front end.

Exit codes: 0 success, 1 a certificate failed verification, 2 the input could
not be parsed or is not a density matrix, 3 an internal numerical fault.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .files import (
    ParseError,
    StateFile,
    certificate_json,
    dumps,
    read_certificate,
    read_state,
    verify_certificate,
)
from .product_geometry import NotFound
from .pseudomixture import MultipleNegative, SearchExhausted, pseudomix
from .qlinalg import (
    PSD_TOL,
    RANK_TOL,
    NoConvergence,
    ValidationError,
    index_of_correlation,
    is_product_state,
    validate_density,
)
from .separable_decomp import (
    RECON_TOL,
    NoSignChange,
    NotSeparable,
    RankDescentError,
    decompose,
    is_ppt,
)
from .states import RANDOM_KINDS, RejectionBudget, random_state, werner

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

NUMERICAL_FAULTS = (
    MultipleNegative,
    SearchExhausted,
    NoConvergence,
    NotFound,
    NoSignChange,
    RankDescentError,
    RejectionBudget,
    NotSeparable,
)


DEFAULT_TOLERANCES = {"rank": RANK_TOL, "psd": PSD_TOL, "recon": RECON_TOL}


def tolerances(args) -> dict:
    return {"rank": args.tol_rank, "psd": args.tol_psd, "recon": args.tol_recon}


def classify(rho: np.ndarray, psd_tol: float = PSD_TOL):
    ppt = is_ppt(rho, psd_tol)
    if is_product_state(rho):
        return "product", ppt
    return ("separable" if ppt.is_ppt else "entangled"), ppt


def check_certificate(rho: np.ndarray, tol: dict, raw: np.ndarray | None = None) -> dict:
    verdict, ppt = classify(rho, tol["psd"])
    return certificate_json(rho if raw is None else raw, verdict, ppt, index_of_correlation(rho), tol)


def decompose_certificate(rho: np.ndarray, tol: dict, dec=None, raw: np.ndarray | None = None) -> dict:
    """Certificate for ``rho``; pass ``dec`` to certify an existing decomposition.

    ``raw`` is the matrix as read from disk, which the certificate's digest
    identifies; the numerics use the validated ``rho``.
    """
    verdict, ppt = classify(rho, tol["psd"])
    if dec is None:
        dec = pseudomix(rho) if verdict == "entangled" else decompose(rho, tol["rank"], tol["psd"])
    residual = float(np.linalg.norm(dec.matrix() - rho))
    return certificate_json(
        rho if raw is None else raw, verdict, ppt, index_of_correlation(rho), tol, dec, {"reconstruction": residual}
    )


def werner_rows(grid: int, tol: dict) -> list[list[str]]:
    rows = []
    for p in np.linspace(0.0, 1.0, grid):
        rho = werner(float(p))
        cert = decompose_certificate(rho, tol)
        card = cert["cardinality"]
        q = cert["decomposition"].get("q")
        rows.append([
            format(float(p), ".17g"),
            cert["verdict"],
            format(cert["ppt"]["min_eigenvalue"], ".17g"),
            str(card["n"]),
            str(card.get("n_plus", card["n"])),
            str(card.get("n_minus", 0)),
            "-" if q is None else format(q, ".17g"),
        ])
    return rows


SCAN_HEADER = ["p", "verdict", "min_pt_eigenvalue", "n", "n_plus", "n_minus", "q"]


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(path: str) -> tuple[np.ndarray, np.ndarray]:
    raw = read_state(path).matrix
    return raw, validate_density(raw)


def cmd_check(args) -> int:
    raw, rho = _load(args.file)
    _emit(dumps(check_certificate(rho, tolerances(args), raw)) + "\n", None)
    return EXIT_OK


def cmd_decompose(args) -> int:
    raw, rho = _load(args.file)
    cert = decompose_certificate(rho, tolerances(args), raw=raw)
    _emit(dumps(cert) + "\n", args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    raw, rho = _load(args.file)
    results = verify_certificate(rho, read_certificate(args.certificate), raw)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}\t{r.name}\t{r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_random(args) -> int:
    rho = random_state(args.kind, args.seed, args.rank)
    label = args.kind if args.rank is None else f"{args.kind}-rank{args.rank}"
    _emit(StateFile(rho, label, args.seed).dumps(), args.output)
    return EXIT_OK


def cmd_scan(args) -> int:
    if args.grid < 2:
        raise ValidationError("--grid must be at least 2")
    lines = ["\t".join(SCAN_HEADER)] + ["\t".join(r) for r in werner_rows(args.grid, tolerances(args))]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsep", description="Two-qubit separability and local decompositions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--tol-rank", type=float, default=RANK_TOL)
    parser.add_argument("--tol-psd", type=float, default=PSD_TOL)
    parser.add_argument("--tol-recon", type=float, default=RECON_TOL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="classify a state as product, separable or entangled")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decompose", help="emit a decomposition certificate")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="re-check a certificate against its state")
    p.add_argument("file")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("random", help="write a seeded random state")
    p.add_argument("--kind", required=True, choices=RANDOM_KINDS)
    p.add_argument("--rank", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--seed", required=True, type=_seed)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_random)

    p = sub.add_parser("scan", help="tabulate a one-parameter family")
    p.add_argument("--family", required=True, choices=("werner",))
    p.add_argument("--grid", required=True, type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERICAL_FAULTS as exc:
        print(f"numerical fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
