"""Linear algebra for two-qubit operators.

Matrices are plain ``numpy`` complex arrays of shape ``(4, 4)`` in the basis
``|00>, |01>, |10>, |11>``; kets are arrays of shape ``(4,)`` or ``(2,)``.
All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from math import sqrt
from typing import NamedTuple

import numpy as np

HERM_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
RANK_TOL = 1e-9
PRODUCT_TOL = 1e-10

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_THRESHOLD = 1e-14


class ValidationError(ValueError):
    """Base class for rejected density-matrix input."""


class NotHermitian(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class BadTrace(ValidationError):
    pass


class NoConvergence(RuntimeError):
    pass


class EigenSystem(NamedTuple):
    """Ascending eigenvalues and matching orthonormal eigenvectors (as columns)."""

    values: np.ndarray
    vectors: np.ndarray


class SchmidtForm(NamedTuple):
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def reassemble(self) -> np.ndarray:
        c = self.coefficients
        return c[0] * np.kron(self.left[:, 0], self.right[:, 0]) + c[1] * np.kron(
            self.left[:, 1], self.right[:, 1]
        )


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def as_operator(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 operator, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def validate_density(m) -> np.ndarray:
    """Check that ``m`` is a density matrix and return a cleaned copy.

    The copy is exactly Hermitian with unit trace. Eigenvalues in
    ``[-PSD_TOL, 0)`` are clipped to zero; anything more negative is an error.
    """
    m = as_operator(m)
    herr = hermiticity_error(m)
    if herr > HERM_TOL:
        raise NotHermitian(f"max |M - M^dagger| = {herr:.3e} exceeds {HERM_TOL:g}")
    m = (m + dagger(m)) / 2
    tr = float(np.trace(m).real)
    if abs(tr - 1) > TRACE_TOL:
        raise BadTrace(f"|trace - 1| = {abs(tr - 1):.3e} exceeds {TRACE_TOL:g}")
    eig = hermitian_eig(m)
    lam_min = float(eig.values[0])
    if lam_min < -PSD_TOL:
        raise NotPositive(f"minimum eigenvalue {lam_min:.3e} is below -{PSD_TOL:g}")
    if lam_min < 0:
        vals = np.clip(eig.values, 0.0, None)
        m = (eig.vectors * vals) @ dagger(eig.vectors)
        m = (m + dagger(m)) / 2
    return m / np.trace(m).real


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose the indices of the second qubit."""
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    return t.transpose(0, 3, 2, 1).reshape(4, 4)


def partial_trace(rho: np.ndarray, side: str) -> np.ndarray:
    """Reduced 2x2 state; ``side`` names the qubit that is kept ('a' or 'b')."""
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    if side == "a":
        return np.einsum("ajbj->ab", t)
    if side == "b":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"side must be 'a' or 'b', not {side!r}")


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            z = col[idx[0]]
            out[:, k] = col * (abs(z) / z)
            out[idx[0], k] = abs(z)
    return out


def _off_norm(a: list[list[complex]]) -> float:
    n = len(a)
    return sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n) if i != j))


def hermitian_eig(h: np.ndarray) -> EigenSystem:
    """Cyclic complex Jacobi eigensolver for a small Hermitian matrix.

    Each rotation first removes the phase of the pivot ``h[p, q]`` and then
    applies a real Givens rotation, so everything stays in complex arithmetic
    with no real embedding. Output is sorted ascending and each eigenvector has
    its first nonzero component real and positive.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    # plain lists: numpy call overhead dominates at this size
    a = ((h + dagger(h)) / 2).tolist()
    v = np.eye(n, dtype=complex).tolist()
    threshold = JACOBI_REL_THRESHOLD * float(np.linalg.norm(h))
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    rows = range(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_norm(a) <= threshold:
            break
        for p, q in pairs:
            b = a[p][q]
            mag = abs(b)
            if mag <= threshold * 1e-3:
                continue
            w = b.conjugate() / mag
            tau = (a[q][q].real - a[p][p].real) / (2 * mag)
            t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + sqrt(1 + tau * tau))
            c = 1 / sqrt(1 + t * t)
            s = t * c
            sw, cw = s * w, c * w
            # unitary columns p, q: diag(1, w) @ [[c, s], [-s, c]], w = conj(phase of pivot)
            for r in rows:
                ap, aq = a[r][p], a[r][q]
                a[r][p] = c * ap - sw * aq
                a[r][q] = s * ap + cw * aq
                vp, vq = v[r][p], v[r][q]
                v[r][p] = c * vp - sw * vq
                v[r][q] = s * vp + cw * vq
            swc, cwc = sw.conjugate(), cw.conjugate()
            rp, rq = a[p], a[q]
            for r in rows:
                ap, aq = rp[r], rq[r]
                rp[r] = c * ap - swc * aq
                rq[r] = s * ap + cwc * aq
            a[p][q] = a[q][p] = 0j
    else:
        off = _off_norm(a)
        if off > threshold:
            raise NoConvergence(
                f"off-diagonal norm {off:.3e} above {threshold:.3e} after {JACOBI_MAX_SWEEPS} sweeps"
            )
    values = np.array([a[i][i].real for i in range(n)])
    order = np.argsort(values, kind="stable")
    return EigenSystem(values[order], _fix_phases(np.array(v)[:, order]))


def min_eigenvalue(h: np.ndarray) -> float:
    return float(hermitian_eig(h).values[0])


def rank_of_values(values: np.ndarray, tol: float = RANK_TOL) -> int:
    cutoff = tol * max(1.0, float(np.max(np.abs(values))))
    return int(np.sum(np.abs(values) > cutoff))


def numerical_rank(h: np.ndarray, tol: float = RANK_TOL) -> int:
    return rank_of_values(hermitian_eig(h).values, tol)


def pseudo_inverse(eig: EigenSystem, tol: float = RANK_TOL) -> np.ndarray:
    """Inverse on the range of a PSD operator given its eigensystem."""
    keep = eig.values > tol * max(1.0, float(eig.values[-1]))
    u = eig.vectors[:, keep]
    return (u / eig.values[keep]) @ dagger(u)


def range_projector(h: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projector onto the range of a PSD operator, and a kernel basis.

    The kernel basis is returned as columns, ordered by ascending eigenvalue.
    """
    eig = hermitian_eig(h)
    lam_max = float(eig.values[-1])
    keep = eig.values > tol * lam_max
    span = eig.vectors[:, keep]
    return span @ dagger(span), eig.vectors[:, ~keep]


def range_residual(h: np.ndarray, v: np.ndarray, tol: float = RANK_TOL) -> float:
    """Norm of the component of ``v`` outside the range of PSD ``h``."""
    proj, _ = range_projector(h, tol)
    return float(np.linalg.norm(v - proj @ v))


def amplitude_matrix(psi: np.ndarray) -> np.ndarray:
    return np.asarray(psi, dtype=complex).reshape(2, 2)


def schmidt_decompose(psi: np.ndarray) -> SchmidtForm:
    """Schmidt form ``c1 |g1>|h1> + c2 |g2>|h2>`` with ``c1 >= c2 >= 0``."""
    u, s, vh = np.linalg.svd(amplitude_matrix(psi))
    return SchmidtForm(s, u, vh.T)


def is_product_vector(psi: np.ndarray, tol: float = PRODUCT_TOL) -> bool:
    return abs(np.linalg.det(amplitude_matrix(psi))) <= tol


def factorize(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a (near-)product ket into local kets ``e, f`` with ``e (x) f`` parallel to it.

    The global phase of ``psi`` is carried by ``e``.
    """
    sf = schmidt_decompose(psi)
    e = sf.left[:, 0]
    f = sf.right[:, 0]
    overlap = np.vdot(np.kron(e, f), psi)
    if abs(overlap) > 0:
        e = e * (overlap / abs(overlap))
    return e, f


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in nats, with 0 ln 0 = 0."""
    vals = hermitian_eig(rho).values
    vals = vals[vals > 1e-15]
    return float(-np.sum(vals * np.log(vals)))


def is_product_state(rho: np.ndarray, tol: float = 1e-9) -> bool:
    rebuilt = np.kron(partial_trace(rho, "a"), partial_trace(rho, "b"))
    return float(np.linalg.norm(rho - rebuilt)) <= tol


def index_of_correlation(rho: np.ndarray) -> float:
    """Mutual information ``S(rho_a) + S(rho_b) - S(rho)``."""
    return entropy(partial_trace(rho, "a")) + entropy(partial_trace(rho, "b")) - entropy(rho)
