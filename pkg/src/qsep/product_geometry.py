"""Where product vectors sit inside subspaces of C^2 (x) C^2.

A ket is a product ``e (x) f`` exactly when its 2x2 amplitude matrix is
singular, so every question here reduces to a determinant condition.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .qlinalg import (
    RANK_TOL,
    amplitude_matrix,
    factorize,
    hermitian_eig,
    partial_transpose,
)

PLANE_ZERO_TOL = 1e-12
DOUBLE_ROOT_TOL = 1e-10
GRID_SIZE = 64
CHART_PASSES = 3


class DegeneratePlane(ValueError):
    pass


class NotFound(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ProductState:
    """The pure product ket ``e (x) f`` with both factors normalized."""

    e: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=complex)
        f = np.asarray(self.f, dtype=complex)
        object.__setattr__(self, "e", e / np.linalg.norm(e))
        object.__setattr__(self, "f", f / np.linalg.norm(f))

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> "ProductState":
        return cls(*factorize(psi))

    @property
    def vector(self) -> np.ndarray:
        return np.kron(self.e, self.f)

    @property
    def pt_vector(self) -> np.ndarray:
        """``e (x) f*``, whose projector is the partial transpose of this one."""
        return np.kron(self.e, self.f.conj())

    def projector(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    def conj_b(self) -> "ProductState":
        return ProductState(self.e, self.f.conj())


class PlaneKind(enum.Enum):
    ALL_PRODUCT = "all_product"
    EXACTLY_TWO = "exactly_two"
    EXACTLY_ONE = "exactly_one"


@dataclass(frozen=True)
class PlaneProductResult:
    kind: PlaneKind
    witnesses: list = field(default_factory=list)
    coefficients: tuple = ()


def det_polarization(m1: np.ndarray, m2: np.ndarray) -> complex:
    """Cross term of ``det(m1 + m2) - det(m1) - det(m2)`` for 2x2 matrices."""
    return m1[0, 0] * m2[1, 1] + m2[0, 0] * m1[1, 1] - m1[0, 1] * m2[1, 0] - m2[0, 1] * m1[1, 0]


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    z = v[idx[0]]
    return v * (abs(z) / z)


def _sort_key(v: np.ndarray) -> tuple:
    w = np.round(_canonical_phase(v), 12)
    return tuple(x for z in w for x in (-z.real, -z.imag))


def binary_quadratic_roots(a: complex, b: complex, c: complex):
    """Projective roots ``(alpha, beta)`` of ``a alpha^2 + b alpha beta + c beta^2``.

    Returns ``None`` when the form vanishes identically, else a pair of roots
    and a flag telling whether they coincide.
    """
    scale = max(abs(a), abs(b), abs(c))
    if scale <= PLANE_ZERO_TOL:
        return None
    disc = b * b - 4 * a * c
    double = abs(disc) <= DOUBLE_ROOT_TOL * scale**2
    swap = abs(a) < abs(c)
    if swap:
        a, c = c, a
    if abs(a) <= 1e-14 * scale:
        # only the cross term survives: the roots are the two basis rays
        return [(1.0, 0.0), (0.0, 1.0)], False
    sq = np.sqrt(complex(disc))
    if (b.conjugate() * sq).real < 0:
        sq = -sq
    qq = -(b + sq) / 2
    if double:
        t1 = t2 = -b / (2 * a)
    elif qq == 0:
        t1 = t2 = 0.0
    else:
        t1, t2 = qq / a, c / qq
    roots = [(t1, 1.0), (t2, 1.0)]
    if swap:
        roots = [(1.0, t) for t, _ in roots]
    return roots, double


def plane_product_vectors(v1: np.ndarray, v2: np.ndarray) -> PlaneProductResult:
    """Product vectors in ``span(v1, v2)``.

    Writing a plane vector as ``alpha q1 + beta q2`` over an orthonormal basis,
    the product condition is a binary quadratic in ``(alpha, beta)``: it either
    vanishes identically or has one or two projective roots.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        raise DegeneratePlane("zero generator")
    u1, u2 = v1 / n1, v2 / n2
    gram = 1 - abs(np.vdot(u1, u2)) ** 2
    if gram <= 1e-12:
        raise DegeneratePlane(f"generators are dependent (Gram determinant {gram:.3e})")
    q1 = u1
    q2 = u2 - np.vdot(q1, u2) * q1
    q2 = q2 / np.linalg.norm(q2)
    m1, m2 = amplitude_matrix(q1), amplitude_matrix(q2)
    coef = (np.linalg.det(m1), det_polarization(m1, m2), np.linalg.det(m2))
    solved = binary_quadratic_roots(*coef)
    if solved is None:
        return PlaneProductResult(
            PlaneKind.ALL_PRODUCT, [ProductState.from_vector(q1), ProductState.from_vector(q2)], coef
        )
    roots, double = solved
    vecs = []
    for alpha, beta in roots:
        w = alpha * q1 + beta * q2
        vecs.append(w / np.linalg.norm(w))
    if double:
        return PlaneProductResult(PlaneKind.EXACTLY_ONE, [ProductState.from_vector(vecs[0])], coef)
    vecs.sort(key=_sort_key)
    return PlaneProductResult(PlaneKind.EXACTLY_TWO, [ProductState.from_vector(v) for v in vecs], coef)


def _null_f(u: np.ndarray) -> np.ndarray:
    """A unit ``f`` with ``u . f = 0`` (no conjugation); any ``f`` if ``u`` vanishes."""
    if np.linalg.norm(u) <= 1e-300:
        return np.array([1.0, 0.0], dtype=complex)
    f = np.array([u[1], -u[0]], dtype=complex)
    return f / np.linalg.norm(f)


class ProductFamily:
    """Product kets orthogonal to a fixed kernel ket, i.e. inside a 3-space.

    A member is parameterized by the first factor ``e``; the chart value ``x``
    stands for ``e = (1, x)`` and ``None`` for the point ``e = (0, 1)``. The
    orthogonality condition is linear in ``f`` and fixes it up to scale.
    """

    def __init__(self, kernel_vector: np.ndarray):
        k = np.asarray(kernel_vector, dtype=complex)
        self.kernel = k / np.linalg.norm(k)
        self._kbar = amplitude_matrix(self.kernel).conj()

    def from_e(self, e: np.ndarray) -> ProductState:
        e = np.asarray(e, dtype=complex)
        return ProductState(e, _null_f(e @ self._kbar))

    def __call__(self, x: complex | None) -> ProductState:
        e = np.array([0.0, 1.0] if x is None else [1.0, x], dtype=complex)
        return self.from_e(e)

    def batch(self, es: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized ``from_e`` over rows of ``es``; returns ``(E, F)`` normalized."""
        es = np.asarray(es, dtype=complex)
        es = es / np.linalg.norm(es, axis=1, keepdims=True)
        u = es @ self._kbar
        fs = np.stack([u[:, 1], -u[:, 0]], axis=1)
        norms = np.linalg.norm(fs, axis=1, keepdims=True)
        dead = norms[:, 0] <= 1e-300
        fs[dead] = [1.0, 0.0]
        norms[dead] = 1.0
        return es, fs / norms


def product_vectors_in_3space(kernel_vector: np.ndarray) -> ProductFamily:
    return ProductFamily(kernel_vector)


def bloch_grid(n: int) -> np.ndarray:
    """``n*n`` unit kets ``(cos(t/2), e^{i p} sin(t/2))`` on a polar-angle grid."""
    theta = np.linspace(0, np.pi, n)
    phi = np.linspace(0, 2 * np.pi, n, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    return np.stack([np.cos(tt / 2), np.exp(1j * pp) * np.sin(tt / 2)], axis=1).astype(complex)


def sphere_points(n: int) -> np.ndarray:
    """``n`` unit kets whose Bloch vectors form a Fibonacci lattice on the sphere."""
    k = np.arange(n) + 0.5
    theta = np.arccos(1 - 2 * k / n)
    phi = np.pi * (1 + 5**0.5) * k
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)


class _TwoRangeEquation:
    """``e`` such that some ``f`` has ``e f`` orthogonal to ``k`` and ``e f*`` orthogonal to ``kb``.

    For fixed ``e`` the two orthogonality conditions are the rows of a 2x2
    matrix acting on ``f``:  ``U(e) = [e^T conj(K); e^dagger Kb]``. A solution
    ``f`` exists iff ``det U(e) = 0``. In the chart ``e = (1, x)`` this reads
    ``c00 + c10 x + c01 conj(x) + c11 |x|^2 = 0``.
    """

    def __init__(self, k: np.ndarray, kb: np.ndarray):
        self.kbar = amplitude_matrix(k).conj()
        self.kb = amplitude_matrix(kb)
        a0, a1 = self.kbar
        b0, b1 = self.kb
        cross = lambda u, v: u[0] * v[1] - u[1] * v[0]  # noqa: E731
        self.c = np.array([[cross(a0, b0), cross(a0, b1)], [cross(a1, b0), cross(a1, b1)]])

    def rows(self, e: np.ndarray) -> np.ndarray:
        return np.stack([e @ self.kbar, e.conj() @ self.kb])

    def solve_f(self, e: np.ndarray) -> tuple[np.ndarray, float]:
        """Best ``f`` for this ``e`` and the residual ``|U(e) f|``."""
        e = e / np.linalg.norm(e)
        _, s, vh = np.linalg.svd(self.rows(e))
        f = vh[-1].conj()
        return f, float(s[-1])

    def det_batch(self, es: np.ndarray) -> np.ndarray:
        u1 = es @ self.kbar
        u2 = es.conj() @ self.kb
        return u1[:, 0] * u2[:, 1] - u1[:, 1] * u2[:, 0]

    def chart(self, flip: bool) -> np.ndarray:
        """Coefficients ``[[c00, c01], [c10, c11]]`` of the chart ``e=(1,x)``, or ``e=(x,1)`` if flipped."""
        return self.c[::-1, ::-1] if flip else self.c

    def closed_form_candidates(self) -> list[np.ndarray]:
        """Candidate ``e`` from the anti-holomorphic fixed-point equation.

        Treating ``y = conj(x)`` as independent gives the Mobius relation
        ``y = M(x)``; solutions satisfy ``x = conj(M)(M(x))``. When that
        composite is the identity (the usual case for separable input) the
        solution set is a circle or line, read off from the real form of the
        equation; otherwise the fixed points solve a quadratic.
        """
        (c00, c01), (c10, c11) = self.c
        cands = [np.array([0.0, 1.0], dtype=complex), np.array([1.0, 0.0], dtype=complex)]
        mob = np.array([[-c10, -c00], [c11, c01]])
        t = mob.conj() @ mob
        scale = np.max(np.abs(t))
        if scale == 0:
            return cands
        if np.max(np.abs(t - np.eye(2) * np.trace(t) / 2)) <= 1e-9 * scale:
            xs = self._circle_points()
        else:
            a, b, cc = t[1, 0], t[1, 1] - t[0, 0], -t[0, 1]
            if abs(a) > 1e-14 * scale:
                sq = np.sqrt(complex(b * b - 4 * a * cc))
                xs = [(-b + sq) / (2 * a), (-b - sq) / (2 * a)]
            elif abs(b) > 1e-14 * scale:
                xs = [-cc / b]
            else:
                xs = []
        cands += [np.array([1.0, x], dtype=complex) for x in xs if np.isfinite(x)]
        return cands

    def _circle_points(self) -> list[complex]:
        """Points of ``c00 + c10 x + c01 conj(x) + c11 |x|^2 = 0`` when it is a real circle/line."""
        (c00, c01), (c10, c11) = self.c
        # unit lam making lam*c11, lam*c00 real and lam*c01 = conj(lam*c10)
        ref = c11 if abs(c11) >= abs(c00) else c00
        if abs(ref) > 1e-12 * max(abs(c10), abs(c01)):
            lam = abs(ref) / ref
        elif c01 != 0:
            lam = np.sqrt(c10.conjugate() / c01)
            lam = lam / abs(lam)
        else:
            lam = 1.0
        big_a = (lam * c11).real
        big_c = (lam * c00).real
        big_b = (lam * c10 + (lam * c01).conjugate()) / 2
        if abs(big_a) > 1e-12 * max(abs(big_b), abs(big_c), 1e-300):
            center = -big_b.conjugate() / big_a
            r2 = abs(big_b) ** 2 / big_a**2 - big_c / big_a
            if r2 < 0:
                return []
            r = np.sqrt(r2)
            return [center + r, center - r, center + 1j * r, center - 1j * r]
        if abs(big_b) == 0:
            return []
        # line 2 Re(B x) = -C
        return [-big_c / (2 * big_b), -big_c / (2 * big_b) + 1j * big_b.conjugate()]

    def newton(self, x: complex, flip: bool, iters: int = 60) -> complex:
        (c00, c01), (c10, c11) = self.chart(flip)
        for _ in range(iters):
            d = c00 + c10 * x + c01 * x.conjugate() + c11 * abs(x) ** 2
            if abs(d) <= 1e-15:
                break
            dx = c10 + c11 * x.conjugate()
            dxb = c01 + c11 * x
            jac = np.array(
                [[(dx + dxb).real, (1j * (dx - dxb)).real], [(dx + dxb).imag, (1j * (dx - dxb)).imag]]
            )
            # Gauss-Newton: on a solution circle the Jacobian has rank one
            step = np.linalg.lstsq(jac, [-d.real, -d.imag], rcond=1e-10)[0]
            x = x + complex(step[0], step[1])
            if not np.isfinite(x) or abs(x) > 1e8:
                break
        return x

    def grid_candidates(self, n: int = GRID_SIZE, passes: int = CHART_PASSES) -> list[np.ndarray]:
        es = bloch_grid(n)
        scores = np.abs(self.det_batch(es))
        out = []
        for idx in np.argsort(scores, kind="stable")[:passes]:
            e = es[idx]
            flip = abs(e[0]) < abs(e[1])
            x = e[0] / e[1] if flip else e[1] / e[0]
            x = self.newton(complex(x), flip)
            if np.isfinite(x):
                out.append(np.array([x, 1.0] if flip else [1.0, x], dtype=complex))
        return out


def kernel_vector(h: np.ndarray) -> np.ndarray:
    """Eigenvector of the smallest eigenvalue."""
    return hermitian_eig(h).vectors[:, 0]


def _best_two_range_product(eq: _TwoRangeEquation, cands, tol: float):
    best, best_res = None, np.inf
    for e in cands:
        f, res = eq.solve_f(e)
        if res < best_res:
            best, best_res = ProductState(e, f), res
        if res <= tol * 1e-3:
            break
    if best_res <= tol:
        return best
    return None


def product_in_both_ranges(
    rho: np.ndarray, tol: float = RANK_TOL, method: str = "auto", kernels=None
) -> ProductState:
    """A product ``e f`` in the range of ``rho`` with ``e f*`` in the range of its partial transpose.

    Intended for PPT states where both ``rho`` and ``rho^{T_b}`` have rank 3.
    ``method`` is ``"closed"`` (fixed points of the anti-Mobius map),
    ``"grid"`` (Bloch grid plus Newton polishing), or ``"auto"`` (closed form,
    then grid).
    """
    if kernels is None:
        kernels = kernel_vector(rho), kernel_vector(partial_transpose(rho))
    eq = _TwoRangeEquation(*kernels)
    found = None
    if method in ("closed", "auto"):
        found = _best_two_range_product(eq, eq.closed_form_candidates(), tol)
    if found is None and method in ("grid", "auto"):
        found = _best_two_range_product(eq, eq.grid_candidates(), tol)
    if found is None:
        raise NotFound(f"no product vector in both ranges within tolerance {tol:g} ({method} search)")
    return found
