"""PPT test and explicit product-state decompositions of separable two-qubit states.

The decomposition subtracts product projectors from ``rho`` with the largest
weight that keeps both ``rho`` and ``rho^{T_b}`` positive. Each subtraction
lowers ``rank(rho) + rank(rho^{T_b})`` by at least one, and the number of
terms produced equals ``max(rank(rho), rank(rho^{T_b}))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .product_geometry import (
    PlaneKind,
    ProductFamily,
    ProductState,
    bloch_grid,
    plane_product_vectors,
    product_in_both_ranges,
)
from .qlinalg import (
    PSD_TOL,
    RANK_TOL,
    EigenSystem,
    dagger,
    hermitian_eig,
    is_product_vector,
    partial_transpose,
    pseudo_inverse,
    rank_of_values,
    schmidt_decompose,
    validate_density,
)

RECON_TOL = 1e-8
EQUAL_WEIGHT_RTOL = 1e-10
BISECTION_STEPS = 200
POLISH_ABOVE = 1e-12


class NotSeparable(ValueError):
    pass


class NotInRange(ValueError):
    pass


class BreaksPositivity(ValueError):
    pass


class InconsistentPlane(RuntimeError):
    pass


class NoSignChange(RuntimeError):
    pass


class RankDescentError(RuntimeError):
    pass


@dataclass(eq=False)
class LocalMixture:
    """``sum_i p_i |e_i f_i><e_i f_i|`` with positive weights summing to one."""

    weights: np.ndarray
    states: list

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.states):
            raise ValueError("weights and states differ in length")

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.weights, self.states))

    def matrix(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        for w, st in self:
            out += w * st.projector()
        return out

    def pt_matrix(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        for w, st in self:
            v = st.pt_vector
            out += w * np.outer(v, v.conj())
        return out

    def residual(self, rho: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix() - rho))

    def conj_b(self) -> "LocalMixture":
        return LocalMixture(self.weights.copy(), [st.conj_b() for st in self.states])


@dataclass
class PptReport:
    is_ppt: bool
    min_eigenvalue: float
    negative_eigenvector: np.ndarray | None = None
    pt_eigensystem: EigenSystem | None = field(default=None, repr=False)


def is_ppt(rho: np.ndarray, tol: float = PSD_TOL) -> PptReport:
    eig = hermitian_eig(partial_transpose(rho))
    lam = float(eig.values[0])
    ok = lam >= -tol
    return PptReport(ok, lam, None if ok else eig.vectors[:, 0], eig)


def _weight(pinv: np.ndarray, v: np.ndarray) -> float:
    return 1.0 / float(np.vdot(v, pinv @ v).real)


def max_weight(rho: np.ndarray, v: np.ndarray, tol: float = RANK_TOL, eig: EigenSystem | None = None) -> float:
    """Largest ``s`` with ``rho - s |v><v|`` still positive: ``1 / <v| rho^+ |v>``."""
    v = np.asarray(v, dtype=complex)
    if eig is None:
        eig = hermitian_eig(rho)
    keep = eig.values > tol * max(1.0, float(eig.values[-1]))
    span = eig.vectors[:, keep]
    outside = float(np.linalg.norm(v - span @ (dagger(span) @ v)))
    if outside > 1e-9:
        raise NotInRange(f"vector leaves the range of the operator by {outside:.3e}")
    return _weight(pseudo_inverse(eig, tol), v)


def subtract(rho: np.ndarray, v: np.ndarray, p: float) -> np.ndarray:
    """``(rho - p |v><v|) / (1 - p)``, checked for positivity."""
    if not 0 < p < 1:
        raise ValueError(f"weight must lie in (0, 1), got {p}")
    v = np.asarray(v, dtype=complex)
    rest = rho - p * np.outer(v, v.conj())
    lam = float(hermitian_eig(rest).values[0])
    if lam < -PSD_TOL:
        raise BreaksPositivity(f"subtracting weight {p:.6g} leaves eigenvalue {lam:.3e}")
    return validate_density(rest / (1 - p))


def _rank1_term(rho: np.ndarray, eig: EigenSystem) -> LocalMixture:
    psi = eig.vectors[:, -1]
    if not is_product_vector(psi, 1e-8):
        raise NotSeparable("rank-one state is not a product state")
    return LocalMixture([1.0], [ProductState.from_vector(psi)])


def _spectral_terms(eig: EigenSystem):
    vals = eig.values[-2:]
    vecs = eig.vectors[:, -2:]
    if not all(is_product_vector(vecs[:, k], 1e-8) for k in range(2)):
        return None
    return vals, [ProductState.from_vector(vecs[:, k]) for k in range(2)]


def _fit_weights(rho: np.ndarray, states: list) -> tuple[np.ndarray, float]:
    cols = np.stack([st.projector().ravel() for st in states], axis=1)
    a = np.vstack([cols.real, cols.imag])
    b = np.concatenate([rho.ravel().real, rho.ravel().imag])
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    return w, float(np.linalg.norm(a @ w - b))


def _polish_terms(rho: np.ndarray, states: list, weights: np.ndarray) -> tuple[list, np.ndarray, float]:
    """Joint least-squares refinement of product factors and weights.

    Near-degenerate planes (almost every vector a product) amplify range noise
    in the closed-form witnesses; a few Levenberg-Marquardt steps on the
    factors themselves recover the fit.
    """

    def unpack(x):
        out = []
        for k in range(len(states)):
            z = x[8 * k : 8 * k + 4] + 1j * x[8 * k + 4 : 8 * k + 8]
            out.append(ProductState(z[:2], z[2:]))
        return out, x[8 * len(states) :]

    def resid(x):
        sts, ws = unpack(x)
        m = sum(w * st.projector() for w, st in zip(ws, sts)) - rho
        return np.concatenate([m.real.ravel(), m.imag.ravel()])

    x0 = np.concatenate(
        [np.concatenate([np.concatenate([st.e, st.f]).real, np.concatenate([st.e, st.f]).imag]) for st in states]
        + [np.asarray(weights, dtype=float)]
    )
    sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    sts, ws = unpack(sol.x)
    return sts, ws, float(np.linalg.norm(sol.fun))


def decompose_rank2(rho: np.ndarray, eig: EigenSystem | None = None) -> LocalMixture:
    """Two-term decomposition of a separable rank-2 state.

    The range is a plane; if it holds exactly two product vectors the state is
    a mixture of those two, and if every vector in it is a product the
    spectral decomposition already is one.
    """
    if eig is None:
        eig = hermitian_eig(rho)
    plane = plane_product_vectors(eig.vectors[:, -1], eig.vectors[:, -2])
    attempts = []
    if plane.kind is PlaneKind.EXACTLY_TWO:
        attempts.append(("witnesses", plane.witnesses))
    spectral = _spectral_terms(eig)
    if spectral is not None:
        attempts.append(("spectral", spectral[1]))
    worst = None
    for _, states in attempts:
        w, res = _fit_weights(rho, states)
        if np.all(w > 1e-10) and res > POLISH_ABOVE:
            states, w, res = _polish_terms(rho, states, w)
        if np.all(w > 1e-10) and res <= RECON_TOL:
            return LocalMixture(w / w.sum(), states)
        worst = (w, res)
    detail = f"weights {worst[0]}, residual {worst[1]:.3e}" if worst else f"plane kind {plane.kind.value}"
    raise InconsistentPlane(f"rank-2 state is not a positive mixture of its plane's products ({detail})")


@dataclass
class DescentStep:
    ranks: tuple[int, int]
    weight: float
    state: ProductState | None


def _dominant_product(rho: np.ndarray, eig: EigenSystem) -> ProductState:
    sf = schmidt_decompose(eig.vectors[:, -1])
    return ProductState(sf.left[:, 0], sf.right[:, 0])


def _best_family_member(family: ProductFamily, pinv: np.ndarray, pinv_b: np.ndarray, flip: bool) -> ProductState:
    """Member of a 3-space product family allowing the largest subtraction.

    With ``flip`` the family lives in the partial-transposed range and the
    returned state is conjugated on ``b`` to match.
    """
    es, fs = family.batch(bloch_grid(8))
    vs = np.einsum("ni,nj->nij", es, fs).reshape(-1, 4)
    vbs = np.einsum("ni,nj->nij", es, fs.conj()).reshape(-1, 4)
    if flip:
        vs, vbs = vbs, vs
    s = 1 / np.einsum("ni,ij,nj->n", vs.conj(), pinv, vs).real
    sb = 1 / np.einsum("ni,ij,nj->n", vbs.conj(), pinv_b, vbs).real
    k = int(np.argmax(np.minimum(s, sb)))
    st = ProductState(es[k], fs[k])
    return st.conj_b() if flip else st


FullRankPolicy = Callable[[np.ndarray, EigenSystem, EigenSystem], ProductState]


def staged_descent(rho: np.ndarray, full_rank_policy: FullRankPolicy, tol: float = RANK_TOL):
    """Run the subtraction procedure; return the mixture and the per-step record.

    ``full_rank_policy`` picks the product to subtract while both ranks are 4.
    """
    terms: list[tuple[float, ProductState]] = []
    history: list[DescentStep] = []
    mass = 1.0
    cur = rho
    last_total = None
    for _ in range(8):
        eig = hermitian_eig(cur)
        pt = partial_transpose(cur)
        eig_b = hermitian_eig(pt)
        if eig_b.values[0] < -PSD_TOL:
            raise NotSeparable(f"partial transpose has eigenvalue {eig_b.values[0]:.3e}")
        r, rb = rank_of_values(eig.values, tol), rank_of_values(eig_b.values, tol)
        if last_total is not None and r + rb >= last_total:
            raise RankDescentError(f"rank sum did not drop: {last_total} -> {r + rb}")
        last_total = r + rb
        if r <= 2 or rb <= 2:
            if r == 1:
                tail = _rank1_term(cur, eig)
            elif rb == 1:
                tail = _rank1_term(pt, eig_b).conj_b()
            elif r == 2:
                tail = decompose_rank2(cur, eig)
            else:
                tail = decompose_rank2(pt, eig_b).conj_b()
            history.append(DescentStep((r, rb), 1.0, None))
            terms.extend((mass * w, st) for w, st in tail)
            break
        pinv, pinv_b = pseudo_inverse(eig, tol), pseudo_inverse(eig_b, tol)
        if r == 4 and rb == 4:
            v = full_rank_policy(cur, eig, eig_b)
        elif r == 3 and rb == 3:
            v = product_in_both_ranges(cur, kernels=(eig.vectors[:, 0], eig_b.vectors[:, 0]))
        elif r == 3:
            v = _best_family_member(ProductFamily(eig.vectors[:, 0]), pinv, pinv_b, flip=False)
        else:
            v = _best_family_member(ProductFamily(eig_b.vectors[:, 0]), pinv, pinv_b, flip=True)
        s = max_weight(cur, v.vector, tol, eig)
        sb = max_weight(pt, v.pt_vector, tol, eig_b)
        p = min(s, sb)
        history.append(DescentStep((r, rb), p, v))
        terms.append((mass * p, v))
        cur = subtract(cur, v.vector, p)
        mass *= 1 - p
    else:
        raise RankDescentError("subtraction did not terminate")
    weights = np.array([w for w, _ in terms])
    return LocalMixture(weights / weights.sum(), [st for _, st in terms]), history


def _require_ppt(rho: np.ndarray, tol: float = PSD_TOL) -> None:
    rep = is_ppt(rho, tol)
    if not rep.is_ppt:
        raise NotSeparable(f"partial transpose has eigenvalue {rep.min_eigenvalue:.3e}")


def five_term_decomposition(rho: np.ndarray) -> LocalMixture:
    """At most five product terms; the first subtracted product is arbitrary."""
    _require_ppt(rho)
    mix, _ = staged_descent(rho, lambda cur, eig, eig_b: _dominant_product(cur, eig))
    return mix


def _slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Geodesic between two unit kets of C^2 (a great circle of the Bloch sphere)."""
    ov = np.vdot(a, b)
    if abs(ov) > 0:
        b = b * (abs(ov) / ov).conjugate()
    theta = np.arccos(min(1.0, abs(ov)))
    if theta < 1e-12:
        return a
    return (np.sin((1 - t) * theta) * a + np.sin(t * theta) * b) / np.sin(theta)


def _weight_gap(st: ProductState, inv: np.ndarray, inv_b: np.ndarray) -> tuple[float, float]:
    s = _weight(inv, st.vector)
    sb = _weight(inv_b, st.pt_vector)
    return s, s - sb


def find_equal_weight_product(rho: np.ndarray, seed_mixture: LocalMixture) -> ProductState:
    """A product whose maximal weights in ``rho`` and ``rho^{T_b}`` coincide.

    For a full-rank pair, ``sum_i p_i / s_i = sum_i p_i / sbar_i = 4`` over any
    decomposition, so the seed terms cannot all have ``s > sbar`` or all
    ``s < sbar``. Between a term of each sign the gap changes sign along the
    connecting geodesic, which bisection resolves.
    """
    inv = np.linalg.inv(rho)
    inv_b = np.linalg.inv(partial_transpose(rho))
    gaps = []
    for _, st in seed_mixture:
        s, g = _weight_gap(st, inv, inv_b)
        if abs(g) <= EQUAL_WEIGHT_RTOL * s:
            return st
        gaps.append(g)
    gaps = np.array(gaps)
    if not (np.any(gaps > 0) and np.any(gaps < 0)):
        raise NoSignChange(f"all seed terms have weight gaps of one sign: {gaps}")
    lo_st = seed_mixture.states[int(np.flatnonzero(gaps < 0)[0])]
    hi_st = seed_mixture.states[int(np.flatnonzero(gaps > 0)[0])]
    lo, hi = 0.0, 1.0
    best, best_rel = None, np.inf
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        st = ProductState(_slerp(lo_st.e, hi_st.e, mid), _slerp(lo_st.f, hi_st.f, mid))
        s, g = _weight_gap(st, inv, inv_b)
        if abs(g) / s < best_rel:
            best, best_rel = st, abs(g) / s
        if best_rel <= 1e-12:
            break
        if g < 0:
            lo = mid
        else:
            hi = mid
    if best_rel > EQUAL_WEIGHT_RTOL:
        raise NoSignChange(f"bisection stalled at relative gap {best_rel:.3e}")
    return best


def _equal_weight_policy(cur: np.ndarray, eig: EigenSystem, eig_b: EigenSystem) -> ProductState:
    seed = five_term_decomposition(cur)
    return find_equal_weight_product(cur, seed)


def decompose(rho: np.ndarray, tol: float = RANK_TOL, psd_tol: float = PSD_TOL) -> LocalMixture:
    """Decomposition into ``max(rank(rho), rank(rho^{T_b}))`` product terms."""
    return decompose_with_history(rho, tol, psd_tol)[0]


def decompose_with_history(rho: np.ndarray, tol: float = RANK_TOL, psd_tol: float = PSD_TOL):
    _require_ppt(rho, psd_tol)
    return staged_descent(rho, _equal_weight_policy, tol)
