"""Entangled two-qubit states as affine combinations of product states.

An entangled ``rho`` is written ``(1 + q) rho_plus - q rho_minus`` with both
parts separable. ``rho_minus`` is one product projector for mixed input and
two for pure input; ``q`` is the smallest weight that makes
``(rho + q rho_minus) / (1 + q)`` PPT for that ``rho_minus``.

The reported ``q`` is what this construction produces. It is an upper bound
on the minimum over all pseudomixtures, not that minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .product_geometry import ProductFamily, ProductState, bloch_grid, sphere_points
from .qlinalg import (
    PSD_TOL,
    RANK_TOL,
    dagger,
    hermitian_eig,
    numerical_rank,
    partial_transpose,
    range_projector,
    rank_of_values,
    schmidt_decompose,
    validate_density,
)
from .separable_decomp import RECON_TOL, LocalMixture, decompose

LIFT_TOL = 1e-12
LIFT_CAP = 2.0**60
LIFT_STEPS = 100
FEASIBLE_TOL = 1e-9
IN_RANGE_GRID = 64
PAIR_GRID = 32
ALTERNATION_STEPS = 60


class NotEntangled(ValueError):
    pass


class MultipleNegative(RuntimeError):
    """More than one negative partial-transpose eigenvalue: a numerical fault."""


class SearchExhausted(RuntimeError):
    pass


@dataclass
class NegativeEigenpair:
    N: float
    vector: np.ndarray


@dataclass(eq=False)
class Pseudomixture:
    q: float
    positive_part: LocalMixture
    negative_part: LocalMixture
    # set when a rank-3 input needed a product outside its range
    cardinality4_fallback: bool = False

    @property
    def cardinality(self) -> int:
        return len(self.positive_part) + len(self.negative_part)

    def matrix(self) -> np.ndarray:
        return (1 + self.q) * self.positive_part.matrix() - self.q * self.negative_part.matrix()


def negative_eigenpair(rho: np.ndarray) -> NegativeEigenpair:
    eig = hermitian_eig(partial_transpose(rho))
    if eig.values[0] >= -PSD_TOL:
        raise NotEntangled(f"partial transpose is positive (min eigenvalue {eig.values[0]:.3e})")
    if eig.values[1] < -PSD_TOL:
        raise MultipleNegative(f"second partial-transpose eigenvalue {eig.values[1]:.3e} is negative")
    return NegativeEigenpair(-float(eig.values[0]), eig.vectors[:, 0])


def lifted_min_eigenvalue(rho: np.ndarray, candidate: LocalMixture, q: float) -> float:
    """Smallest eigenvalue of ``rho^{T_b} + q rho_minus^{T_b}``."""
    return float(hermitian_eig(partial_transpose(rho) + q * candidate.pt_matrix()).values[0])


def minimal_lift(rho: np.ndarray, candidate: LocalMixture) -> float | None:
    """Smallest ``q > 0`` at which ``rho^{T_b} + q rho_minus^{T_b}`` becomes positive.

    The smallest eigenvalue is concave in ``q``, so the feasible set is an
    interval and bisection from a doubled upper bound finds its left end.
    Infeasible candidates return ``None``. The returned ``q`` sits on the
    feasible side, so the lifted operator has no eigenvalue below zero beyond
    rounding.
    """
    a = partial_transpose(rho)
    b = candidate.pt_matrix()

    def lam(q: float) -> float:
        return float(hermitian_eig(a + q * b).values[0])

    if lam(0.0) >= 0:
        return 0.0
    _, kernel = range_projector(b, RANK_TOL)
    if kernel.shape[1]:
        comp = dagger(kernel) @ a @ kernel
        if hermitian_eig(comp).values[0] < -PSD_TOL:
            return None
    hi = 1.0
    while lam(hi) < 0:
        hi *= 2
        if hi > LIFT_CAP:
            return None
    lo = 0.0 if hi == 1.0 else hi / 2
    for _ in range(LIFT_STEPS):
        mid = (lo + hi) / 2
        val = lam(mid)
        if val >= 0:
            hi = mid
            if val <= LIFT_TOL and hi - lo <= 4e-16 * hi:
                break
        else:
            lo = mid
        if hi - lo <= 2e-16 * hi:
            break
    return hi


def closed_form_lift(rho: np.ndarray, candidate: LocalMixture) -> float | None:
    """Minimal lift from the determinant lemma, for full-rank ``rho^{T_b}``.

    With ``rho_minus^{T_b} = W D W^dagger`` the lifted operator is singular
    exactly when ``-1/q`` is an eigenvalue of ``D^1/2 W^dagger A^-1 W D^1/2``.
    """
    a_inv = np.linalg.inv(partial_transpose(rho))
    w = np.stack([st.pt_vector for st in candidate.states], axis=1) * np.sqrt(candidate.weights)
    mu = np.linalg.eigvalsh(dagger(w) @ a_inv @ w)[0]
    return -1.0 / mu if mu < 0 else None


def _lift_scores(a_inv: np.ndarray, es: np.ndarray, fs: np.ndarray) -> np.ndarray:
    """``<w|A^-1|w>`` for ``w = e (x) f*`` row by row; negative means feasible with ``q = -1/score``."""
    ws = np.einsum("ni,nj->nij", es, fs.conj()).reshape(-1, 4)
    return np.einsum("ni,ij,nj->n", ws.conj(), a_inv, ws).real


def _alternate(a_inv: np.ndarray, e: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate descent of ``<e f*|A^-1|e f*>``; each half-step is a 2x2 eigenproblem."""
    c = a_inv.reshape(2, 2, 2, 2)
    for _ in range(ALTERNATION_STEPS):
        g = f.conj()
        m_f = np.einsum("a,abcd,c->bd", e.conj(), c, e)
        g = np.linalg.eigh(m_f)[1][:, 0]
        f = g.conj()
        m_e = np.einsum("b,abcd,d->ac", g.conj(), c, g)
        e_new = np.linalg.eigh(m_e)[1][:, 0]
        if abs(abs(np.vdot(e_new, e)) - 1) < 1e-15:
            e = e_new
            break
        e = e_new
    return e, f


def _best_product(a_inv: np.ndarray, seeds: list[ProductState]) -> ProductState | None:
    grid = sphere_points(PAIR_GRID)
    es = np.repeat(grid, len(grid), axis=0)
    fs = np.tile(grid, (len(grid), 1))
    if seeds:
        es = np.vstack([np.stack([s.e for s in seeds]), es])
        fs = np.vstack([np.stack([s.f for s in seeds]), fs])
    scores = _lift_scores(a_inv, es, fs)
    k = int(np.argmin(scores))
    e, f = _alternate(a_inv, es[k], fs[k])
    refined = _lift_scores(a_inv, e[None], f[None])[0]
    if refined <= scores[k] and refined < -FEASIBLE_TOL:
        return ProductState(e, f)
    if scores[k] < -FEASIBLE_TOL:
        return ProductState(es[k], fs[k])
    return None


def _best_in_range(a_inv: np.ndarray, family: ProductFamily) -> ProductState | None:
    es, fs = family.batch(bloch_grid(IN_RANGE_GRID))
    scores = _lift_scores(a_inv, es, fs)
    k = int(np.argmin(scores))
    if scores[k] >= -FEASIBLE_TOL:
        return None

    def score(angles):
        t, p = angles
        st = family.from_e(np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)]))
        return _lift_scores(a_inv, st.e[None], st.f[None])[0]

    e0 = es[k]
    start = [2 * np.arctan2(abs(e0[1]), abs(e0[0])), np.angle(e0[1]) - np.angle(e0[0])]
    res = minimize(score, start, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    if res.fun < scores[k]:
        t, p = res.x
        return family.from_e(np.array([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)]))
    return family.from_e(es[k])


def _schmidt_products_of_negative(vec: np.ndarray) -> list[ProductState]:
    """Products ``|g_i, h_i>`` with ``|N> = sum_i c_i |g_i, h_i*>``."""
    sf = schmidt_decompose(vec)
    return [ProductState(sf.left[:, i], sf.right[:, i].conj()) for i in range(2)]


def _pure_negative_part(rho: np.ndarray, psi: np.ndarray) -> LocalMixture:
    """Two products for a pure entangled state, weighted to minimize the lift.

    If ``psi = c1 |g1 h1> + c2 |g2 h2>`` then ``|N>`` is proportional to
    ``|g1, h2*> - |g2, h1*>``, so its Schmidt products are taken in the Schmidt
    frame of ``psi``. This fixes them even when ``|N>`` is maximally entangled
    and its own Schmidt basis is arbitrary.
    """
    sf = schmidt_decompose(psi)
    g, h = sf.left, sf.right
    states = [ProductState(g[:, 0], h[:, 1]), ProductState(g[:, 1], h[:, 0])]

    def q_of(t: float) -> float:
        q = closed_form_lift(rho, LocalMixture([t, 1 - t], states))
        return np.inf if q is None else q

    res = minimize_scalar(q_of, bounds=(1e-9, 1 - 1e-9), method="bounded", options={"xatol": 1e-12})
    t = float(res.x) if np.isfinite(res.fun) and res.fun <= q_of(0.5) else 0.5
    return LocalMixture([t, 1 - t], states)


@dataclass
class NegativePartSearch:
    mixture: LocalMixture
    in_range: bool = False
    fallback: bool = False
    notes: list = field(default_factory=list)


def search_negative_part(rho: np.ndarray) -> NegativePartSearch:
    pair = negative_eigenpair(rho)
    eig = hermitian_eig(rho)
    r = rank_of_values(eig.values)
    if r == 1:
        return NegativePartSearch(_pure_negative_part(rho, eig.vectors[:, -1]))
    a_inv = np.linalg.inv(partial_transpose(rho))
    schmidt = _schmidt_products_of_negative(pair.vector)
    if r == 3:
        st = _best_in_range(a_inv, ProductFamily(eig.vectors[:, 0]))
        if st is not None:
            return NegativePartSearch(LocalMixture([1.0], [st]), in_range=True)
    st = _best_product(a_inv, schmidt)
    fallback = r == 3
    if st is None:
        scores = _lift_scores(a_inv, np.stack([schmidt[0].e]), np.stack([schmidt[0].f]))
        if scores[0] >= -FEASIBLE_TOL:
            raise SearchExhausted("no feasible product found, including the dominant Schmidt product of |N>")
        st = schmidt[0]
    return NegativePartSearch(LocalMixture([1.0], [st]), fallback=fallback)


def find_negative_part(rho: np.ndarray) -> LocalMixture:
    return search_negative_part(rho).mixture


def pseudomix(rho: np.ndarray) -> Pseudomixture:
    rho = validate_density(rho)
    search = search_negative_part(rho)
    minus = search.mixture
    q = minimal_lift(rho, minus)
    if q is None:
        raise SearchExhausted("selected negative part turned out infeasible")
    plus_state = validate_density((rho + q * minus.matrix()) / (1 + q))
    plus = decompose(plus_state)
    return Pseudomixture(q, plus, minus, cardinality4_fallback=search.fallback)


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    bound: float


def verify_pseudomixture(rho: np.ndarray, pm: Pseudomixture, recon_tol: float = RECON_TOL) -> list[Check]:
    """Re-check a pseudomixture against ``rho`` from its parts alone."""
    checks = [Check("q_positive", pm.q > 0, pm.q, 0.0)]
    recon = float(np.linalg.norm(pm.matrix() - rho))
    checks.append(Check("reconstruction", recon <= recon_tol, recon, recon_tol))
    plus = pm.positive_part.matrix()
    lam = float(np.linalg.eigvalsh(partial_transpose(plus))[0])
    checks.append(Check("positive_part_ppt", lam >= -PSD_TOL, lam, -PSD_TOL))
    for label, part in (("positive", pm.positive_part), ("negative", pm.negative_part)):
        w = part.weights
        checks.append(Check(f"{label}_weights_positive", bool(np.all(w > 0)), float(w.min()), 0.0))
        dev = abs(float(w.sum()) - 1)
        checks.append(Check(f"{label}_weights_sum", dev <= 1e-10, dev, 1e-10))
        worst = max(abs(np.linalg.det(st.vector.reshape(2, 2))) for st in part.states)
        checks.append(Check(f"{label}_terms_product", worst <= 1e-10, float(worst), 1e-10))
    return checks


def lifted_ranks(rho: np.ndarray, pm: Pseudomixture) -> tuple[int, int]:
    """Ranks of ``rho(q)`` and its partial transpose."""
    lifted = (rho + pm.q * pm.negative_part.matrix()) / (1 + pm.q)
    return numerical_rank(lifted), numerical_rank(partial_transpose(lifted))

