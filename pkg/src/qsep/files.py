"""State files and decomposition certificates.

Both are JSON. Complex numbers are ``[re, im]`` pairs, matrices are row-major
nested lists in the basis ``|00>, |01>, |10>, |11>``, and every float is
written with 17 significant digits so a file read back and written again is
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .product_geometry import ProductState
from .pseudomixture import Pseudomixture
from .separable_decomp import LocalMixture

STATE_FORMAT = "qsep-state/1"
CERT_FORMAT = "qsep-certificate/1"


class ParseError(ValueError):
    pass


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(float(x), ".17g")


def _is_inline(obj) -> bool:
    return isinstance(obj, list) and all(
        not isinstance(x, (list, dict)) or (isinstance(x, list) and all(not isinstance(y, (list, dict)) for y in x))
        for x in obj
    )


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON text: insertion-ordered keys, 17-digit floats, short lists inline."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {dumps(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        obj = list(obj)
        if _is_inline(obj):
            return "[" + ", ".join(dumps(x, indent + 1) for x in obj) + "]"
        items = [f"{pad}  {dumps(x, indent + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def complex_pairs(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in a]
    return [complex_pairs(row) for row in a]


def _parse_complex(value, where: str) -> complex:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise ParseError(f"{where}: expected a [re, im] pair of numbers, got {value!r}")
    z = complex(value[0], value[1])
    if not np.isfinite(z):
        raise ParseError(f"{where}: non-finite entry")
    return z


def parse_vector(value, length: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != length:
        raise ParseError(f"{where}: expected {length} [re, im] pairs")
    return np.array([_parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)])


def parse_matrix(value, where: str = "matrix") -> np.ndarray:
    if not isinstance(value, list) or len(value) != 4:
        raise ParseError(f"{where}: expected 4 rows")
    return np.array([parse_vector(row, 4, f"{where}[{i}]") for i, row in enumerate(value)])


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


@dataclass
class StateFile:
    matrix: np.ndarray
    label: str | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"format": STATE_FORMAT}
        if self.label is not None:
            out["label"] = self.label
        if self.seed is not None:
            out["seed"] = self.seed
        out.update(self.extra)
        out["matrix"] = complex_pairs(self.matrix)
        return out

    def dumps(self) -> str:
        return dumps(self.to_json()) + "\n"


def matrix_digest(m: np.ndarray) -> str:
    return hashlib.sha256(dumps(complex_pairs(m)).encode()).hexdigest()


def loads_state(text: str, source: str = "<state>") -> StateFile:
    data = _load_json(text, source)
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    if "matrix" not in data:
        raise ParseError(f"{source}: missing field 'matrix'")
    extra = {k: v for k, v in data.items() if k not in ("format", "label", "seed", "matrix")}
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ParseError(f"{source}: field 'seed' must be an integer")
    return StateFile(parse_matrix(data["matrix"], f"{source}: matrix"), data.get("label"), seed, extra)


def read_state(path) -> StateFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return loads_state(text, str(path))


def mixture_json(mix: LocalMixture) -> list:
    return [
        {"weight": float(w), "e": complex_pairs(st.e), "f": complex_pairs(st.f)}
        for w, st in mix
    ]


def mixture_from_json(terms, where: str) -> LocalMixture:
    if not isinstance(terms, list) or not terms:
        raise ParseError(f"{where}: expected a non-empty list of terms")
    weights, states = [], []
    for i, t in enumerate(terms):
        if not isinstance(t, dict) or not {"weight", "e", "f"} <= t.keys():
            raise ParseError(f"{where}[{i}]: term needs 'weight', 'e' and 'f'")
        weights.append(float(t["weight"]))
        e = parse_vector(t["e"], 2, f"{where}[{i}].e")
        f = parse_vector(t["f"], 2, f"{where}[{i}].f")
        st = ProductState.__new__(ProductState)
        # keep the stored kets as written; the verifier checks their norms
        object.__setattr__(st, "e", e)
        object.__setattr__(st, "f", f)
        states.append(st)
    return LocalMixture(weights, states)


def decomposition_json(dec) -> dict:
    if isinstance(dec, Pseudomixture):
        return {
            "kind": "pseudomixture",
            "q": float(dec.q),
            "q_is_constructive": True,
            "cardinality4_fallback": bool(dec.cardinality4_fallback),
            "positive_part": mixture_json(dec.positive_part),
            "negative_part": mixture_json(dec.negative_part),
        }
    return {"kind": "local_mixture", "terms": mixture_json(dec)}


def certificate_json(
    state: np.ndarray,
    verdict: str,
    ppt,
    correlation: float,
    tolerances: dict,
    decomposition=None,
    residuals: dict | None = None,
) -> dict:
    cert = {
        "format": CERT_FORMAT,
        "tool_version": __version__,
        "state_sha256": matrix_digest(state),
        "verdict": verdict,
        "tolerances": tolerances,
        "ppt": {
            "is_ppt": bool(ppt.is_ppt),
            "min_eigenvalue": float(ppt.min_eigenvalue),
            "negative_eigenvector": None
            if ppt.negative_eigenvector is None
            else complex_pairs(ppt.negative_eigenvector),
        },
        "index_of_correlation": float(correlation),
    }
    if decomposition is not None:
        cert["decomposition"] = decomposition_json(decomposition)
        if isinstance(decomposition, Pseudomixture):
            cert["cardinality"] = {
                "n": decomposition.cardinality,
                "n_plus": len(decomposition.positive_part),
                "n_minus": len(decomposition.negative_part),
            }
        else:
            cert["cardinality"] = {"n": len(decomposition)}
    if residuals is not None:
        cert["residuals"] = residuals
    return cert


def loads_certificate(text: str, source: str = "<certificate>") -> dict:
    data = _load_json(text, source)
    if not isinstance(data, dict) or data.get("format") != CERT_FORMAT:
        raise ParseError(f"{source}: not a {CERT_FORMAT} document")
    for key in ("verdict", "tolerances", "decomposition", "residuals"):
        if key not in data:
            raise ParseError(f"{source}: missing field {key!r}")
    return data


def read_certificate(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return loads_certificate(text, str(path))


# Independent re-verification. Everything below works from the JSON contents
# and numpy's LAPACK eigensolver only, never from the engine's own routines.

RESIDUAL_FLOOR = 1e-14


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _pt(m: np.ndarray) -> np.ndarray:
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def _terms_matrix(terms) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for w, st in terms:
        v = np.kron(st.e, st.f)
        out += w * np.outer(v, v.conj())
    return out


def _mixture_checks(prefix: str, mix: LocalMixture, out: list) -> None:
    w = mix.weights
    out.append(CheckResult(f"{prefix}_weights_positive", bool(np.all(w > 0)), f"min weight {w.min():.3e}"))
    dev = abs(float(w.sum()) - 1)
    out.append(CheckResult(f"{prefix}_weights_sum", dev <= 1e-10, f"|sum - 1| = {dev:.3e}"))
    worst = max(max(abs(np.linalg.norm(st.e) - 1), abs(np.linalg.norm(st.f) - 1)) for st in mix.states)
    out.append(CheckResult(f"{prefix}_kets_normalized", worst <= 1e-12, f"worst norm error {worst:.3e}"))


def _residual_check(name: str, measured: float, stated, bound: float, out: list) -> None:
    ok = measured <= bound
    detail = f"{measured:.3e} (bound {bound:.1e}"
    if isinstance(stated, (int, float)) and not isinstance(stated, bool):
        ok = ok and measured <= 2 * stated + RESIDUAL_FLOOR
        detail += f", stated {stated:.3e}"
    else:
        ok = False
        detail += ", stated value missing"
    out.append(CheckResult(name, ok, detail + ")"))


def verify_certificate(rho: np.ndarray, cert: dict, raw: np.ndarray | None = None) -> list[CheckResult]:
    """Re-check every claim in ``cert`` against ``rho``; parse problems raise ParseError.

    The digest is compared against ``raw`` (the matrix as stored) when given.
    """
    out: list[CheckResult] = []
    digest = matrix_digest(rho if raw is None else raw)
    out.append(CheckResult("state_matches", digest == cert.get("state_sha256"), f"sha256 {digest[:16]}..."))

    tol = cert["tolerances"]
    try:
        psd_tol, recon_tol = float(tol["psd"]), float(tol["recon"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"tolerances: {exc}") from exc
    stated = cert["residuals"] if isinstance(cert["residuals"], dict) else {}

    lam = float(np.linalg.eigvalsh(_pt(rho))[0])
    ppt = lam >= -psd_tol
    verdict = cert["verdict"]
    if verdict not in ("product", "separable", "entangled"):
        raise ParseError(f"verdict: unknown value {verdict!r}")
    out.append(CheckResult("verdict", (verdict == "entangled") == (not ppt), f"min PT eigenvalue {lam:.3e}"))
    if verdict == "product":
        rho_a = np.einsum("ijkj->ik", rho.reshape(2, 2, 2, 2))
        rho_b = np.einsum("ijil->jl", rho.reshape(2, 2, 2, 2))
        dev = float(np.linalg.norm(rho - np.kron(rho_a, rho_b)))
        out.append(CheckResult("product_state", dev <= 1e-9, f"||rho - rho_a x rho_b|| = {dev:.3e}"))

    dec = cert["decomposition"]
    if not isinstance(dec, dict) or dec.get("kind") not in ("local_mixture", "pseudomixture"):
        raise ParseError("decomposition: expected kind 'local_mixture' or 'pseudomixture'")
    card = cert.get("cardinality", {})
    if dec["kind"] == "local_mixture":
        out.append(CheckResult("kind_matches_verdict", verdict != "entangled", "local mixture"))
        mix = mixture_from_json(dec.get("terms"), "decomposition.terms")
        _mixture_checks("terms", mix, out)
        recon = float(np.linalg.norm(_terms_matrix(mix) - rho))
        _residual_check("reconstruction", recon, stated.get("reconstruction"), recon_tol, out)
        out.append(CheckResult("cardinality", card.get("n") == len(mix) and len(mix) <= 4, f"n = {len(mix)}"))
        return out

    out.append(CheckResult("kind_matches_verdict", verdict == "entangled", "pseudomixture"))
    q = dec.get("q")
    if not isinstance(q, (int, float)) or isinstance(q, bool):
        raise ParseError("decomposition.q: expected a number")
    out.append(CheckResult("q_positive", q > 0, f"q = {q!r}"))
    plus = mixture_from_json(dec.get("positive_part"), "decomposition.positive_part")
    minus = mixture_from_json(dec.get("negative_part"), "decomposition.negative_part")
    _mixture_checks("positive", plus, out)
    _mixture_checks("negative", minus, out)
    plus_m = _terms_matrix(plus)
    recon = float(np.linalg.norm((1 + q) * plus_m - q * _terms_matrix(minus) - rho))
    _residual_check("reconstruction", recon, stated.get("reconstruction"), recon_tol, out)
    lam_plus = float(np.linalg.eigvalsh(_pt(plus_m))[0])
    out.append(CheckResult("positive_part_ppt", lam_plus >= -psd_tol, f"min PT eigenvalue {lam_plus:.3e}"))
    n_ok = (
        card.get("n_plus") == len(plus)
        and card.get("n_minus") == len(minus)
        and card.get("n") == len(plus) + len(minus)
        and len(plus) <= 4
        and len(minus) <= 2
    )
    out.append(CheckResult("cardinality", n_ok, f"n+ = {len(plus)}, n- = {len(minus)}"))
    return out
