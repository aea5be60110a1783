"""Named states and seeded random-state generators.

Random draws come from Philox4x64-10 keyed directly by the 64-bit seed
(counter starting at zero), so a corpus can be regenerated from its seeds in
any language with a Philox implementation. Each 64-bit output ``x`` becomes
the double ``(x >> 11) * 2**-53``; Gaussians use Box-Muller on consecutive
pairs ``(u1, u2)``: ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)``. A complex
Gaussian takes its real and imaginary parts from one such pair.
"""

from __future__ import annotations

import numpy as np

from .product_geometry import ProductFamily, ProductState
from .qlinalg import ket, partial_transpose, projector, validate_density
from .separable_decomp import is_ppt

MASK64 = (1 << 64) - 1
REJECTION_BUDGET = 10_000


class RejectionBudget(RuntimeError):
    pass


class StateRng:
    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._bits = np.random.Philox(key=self.seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n).astype(np.uint64)
        return (raw >> np.uint64(11)).astype(float) * 2.0**-53

    def complex_normal(self, n: int) -> np.ndarray:
        u = self.uniform(2 * n).reshape(n, 2)
        r = np.sqrt(-2 * np.log1p(-u[:, 0]))
        return r * np.cos(2 * np.pi * u[:, 1]) + 1j * r * np.sin(2 * np.pi * u[:, 1])

    def unit_vector(self, dim: int) -> np.ndarray:
        v = self.complex_normal(dim)
        return v / np.linalg.norm(v)

    def simplex(self, k: int) -> np.ndarray:
        """Uniform (flat Dirichlet) weights."""
        x = -np.log1p(-self.uniform(k))
        return x / x.sum()


def bell_phi_plus() -> np.ndarray:
    return projector(ket(1, 0, 0, 1))


def bell_psi_minus() -> np.ndarray:
    return projector(ket(0, 1, -1, 0))


def canonical_pure(angle: float) -> np.ndarray:
    """``cos A |00> + sin A |11>``."""
    return projector(np.array([np.cos(angle), 0, 0, np.sin(angle)], dtype=complex))


def werner(p: float) -> np.ndarray:
    """``p |psi-><psi-| + (1 - p) I/4``; entangled iff ``p > 1/3``."""
    return p * bell_psi_minus() + (1 - p) * np.eye(4, dtype=complex) / 4


def pure_plus_products(psi: np.ndarray, weights, states) -> np.ndarray:
    """``(|psi><psi| + sum_i p_i |e_i f_i><e_i f_i|) / (1 + sum_i p_i)`` with ``p_i > 0``."""
    m = projector(np.asarray(psi, dtype=complex))
    m = m + sum(w * st.projector() for w, st in zip(weights, states))
    return validate_density(m / (1 + sum(weights)))


def mixture(weights, states) -> np.ndarray:
    return validate_density(sum(w * st.projector() for w, st in zip(weights, states)))


def random_product_state(rng: StateRng) -> ProductState:
    return ProductState(rng.unit_vector(2), rng.unit_vector(2))


def random_pure(rng: StateRng) -> np.ndarray:
    return validate_density(projector(rng.unit_vector(4)))


def random_mixed(rng: StateRng, rank: int = 4) -> np.ndarray:
    """Normalized ``G G^dagger`` for a 4 x rank complex Gaussian ``G``."""
    g = rng.complex_normal(4 * rank).reshape(4, rank)
    m = g @ g.conj().T
    return validate_density(m / np.trace(m).real)


def random_separable(rng: StateRng, terms: int = 4) -> np.ndarray:
    states = [random_product_state(rng) for _ in range(terms)]
    return mixture(rng.simplex(terms), states)


def random_product(rng: StateRng) -> np.ndarray:
    return validate_density(random_product_state(rng).projector())


def random_entangled(rng: StateRng, rank: int = 4) -> np.ndarray:
    for _ in range(REJECTION_BUDGET):
        rho = random_mixed(rng, rank)
        if not is_ppt(rho).is_ppt:
            return rho
    raise RejectionBudget(f"{REJECTION_BUDGET} draws of rank {rank} were all PPT")


def random_ppt(rng: StateRng, rank: int = 4) -> np.ndarray:
    """Rejection-sample ``random_mixed`` until PPT."""
    for _ in range(REJECTION_BUDGET):
        rho = random_mixed(rng, rank)
        if is_ppt(rho).is_ppt:
            return rho
    raise RejectionBudget(f"{REJECTION_BUDGET} draws of rank {rank} were all NPT")


def random_separable_with_ranks(rng: StateRng, ranks: tuple[int, int]) -> np.ndarray:
    """Separable state built to have ``(rank(rho), rank(rho^{T_b}))`` equal to ``ranks``.

    Supported: (1,1), (2,2), (3,3), (3,4), (4,3), (4,4). For (3,4) the four
    products are drawn from one random 3-space; (4,3) is its partial transpose.
    """
    if ranks in ((1, 1), (2, 2), (3, 3), (4, 4)):
        return random_separable(rng, ranks[0])
    if ranks in ((3, 4), (4, 3)):
        family = ProductFamily(rng.unit_vector(4))
        states = [family.from_e(rng.unit_vector(2)) for _ in range(4)]
        rho = mixture(rng.simplex(4), states)
        return rho if ranks == (3, 4) else validate_density(partial_transpose(rho))
    raise ValueError(f"unsupported rank pair {ranks}")


RANDOM_KINDS = ("pure", "mixed", "separable", "entangled", "product")


def random_state(kind: str, seed: int, rank: int | None = None) -> np.ndarray:
    rng = StateRng(seed)
    if kind == "pure":
        return random_pure(rng)
    if kind == "mixed":
        return random_mixed(rng, rank or 4)
    if kind == "separable":
        return random_separable(rng, rank or 4)
    if kind == "entangled":
        return random_entangled(rng, rank or 4)
    if kind == "product":
        return random_product(rng)
    raise ValueError(f"unknown kind {kind!r}; expected one of {', '.join(RANDOM_KINDS)}")
