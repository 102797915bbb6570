"""Small dense linear algebra for two-qubit steering computations.

Conventions used throughout the package:

* computational basis ``|0>``, ``|1>`` with the standard Pauli matrices,
* tensor products ordered Alice (x) Bob,
* states are complex density matrices (trace one, PSD) stored as
  ``numpy`` arrays of ``complex128``.

Everything here is plain functions on ``numpy`` arrays; validation helpers
raise ``ValueError`` with a descriptive message instead of returning flags.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "ID2",
    "ket",
    "projector",
    "ket_plus",
    "ket_minus",
    "singlet_state",
    "tensor",
    "partial_trace_A",
    "min_eigenvalue",
    "fidelity",
    "hermitian_part",
    "assert_hermitian",
    "assert_density_matrix",
    "psd_sqrt",
    "hermitian_basis",
    "real_embedding",
    "from_real_embedding",
]

HERMITIAN_TOL = 1e-10
DENSITY_EIG_TOL = -1e-10
DEFAULT_MAX_TENSOR_DIM = 16

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


def ket(*amplitudes: complex) -> np.ndarray:
    """Normalized column vector from amplitudes."""
    v = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("zero vector cannot be normalized")
    return v / norm


def projector(psi: np.ndarray) -> np.ndarray:
    """Rank-one projector |psi><psi|."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def ket_plus() -> np.ndarray:
    return ket(1, 1)


def ket_minus() -> np.ndarray:
    return ket(1, -1)


def singlet_state() -> np.ndarray:
    """Density matrix of the two-qubit singlet (|01> - |10>)/sqrt(2)."""
    psi = ket(0, 1, -1, 0)
    return projector(psi)


def tensor(a: np.ndarray, b: np.ndarray, *, max_dim: int = DEFAULT_MAX_TENSOR_DIM) -> np.ndarray:
    """Kronecker product with Alice as the left factor.

    Raises ``ValueError`` if the resulting dimension would exceed ``max_dim``
    (this package only ever needs two-qubit products).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("tensor expects 2-d matrices")
    out_dim = a.shape[0] * b.shape[0]
    if out_dim > max_dim:
        raise ValueError(f"tensor result dimension {out_dim} exceeds maximum {max_dim}")
    return np.kron(a, b)


def partial_trace_A(rho: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    """Trace out Alice's factor of a bipartite operator on C^dim_a (x) C^dim_b."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(
            f"operator shape {rho.shape} incompatible with dims ({dim_a}, {dim_b})"
        )
    reshaped = rho.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.einsum("abad->bd", reshaped)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """(A + A^dagger)/2."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def assert_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``a`` unchanged after checking Hermiticity to ``tol``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} is not square: shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise ValueError(f"{name} is not Hermitian: max deviation {dev:.3e} > {tol:.1e}")
    return a


def min_eigenvalue(a: np.ndarray, tol: float = HERMITIAN_TOL) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    a = assert_hermitian(a, tol)
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def assert_density_matrix(
    rho: np.ndarray,
    *,
    trace_tol: float = 1e-10,
    eig_tol: float = DENSITY_EIG_TOL,
    name: str = "state",
) -> np.ndarray:
    """Validate trace one, Hermiticity and positivity; returns the state."""
    rho = assert_hermitian(rho, name=name)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"{name} trace {tr} deviates from 1 by more than {trace_tol:.1e}")
    lam = min_eigenvalue(rho)
    if lam < eig_tol:
        raise ValueError(f"{name} has negative eigenvalue {lam:.3e} below {eig_tol:.1e}")
    return rho


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Hermitian square root of a PSD matrix (negative rounding clipped)."""
    a = assert_hermitian(a)
    vals, vecs = np.linalg.eigh(hermitian_part(a))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    For pure ``sigma = |psi><psi|`` this reduces to ``<psi|rho|psi>``.  Both
    arguments must be valid density matrices.
    """
    rho = assert_density_matrix(rho, name="rho")
    sigma = assert_density_matrix(sigma, name="sigma")
    root = psd_sqrt(rho) @ psd_sqrt(sigma)
    f = float(np.linalg.svd(root, compute_uv=False).sum() ** 2)
    return min(f, 1.0) if f <= 1.0 + 1e-12 else f


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Orthonormal (Frobenius) basis of Hermitian dim x dim matrices.

    Ordering: diagonal units first, then for each i<j the pair
    (E_ij + E_ji)/sqrt(2) and (-iE_ij + iE_ji)/sqrt(2), so that expansion
    coefficients of any Hermitian matrix are real.
    """
    basis: list[np.ndarray] = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[i, j] = inv_sqrt2
            s[j, i] = inv_sqrt2
            basis.append(s)
            t = np.zeros((dim, dim), dtype=complex)
            t[i, j] = -1.0j * inv_sqrt2
            t[j, i] = 1.0j * inv_sqrt2
            basis.append(t)
    return basis


def real_embedding(a: np.ndarray) -> np.ndarray:
    """Real symmetric 2d x 2d image [[Re A, -Im A], [Im A, Re A]] of Hermitian A."""
    a = np.asarray(a, dtype=complex)
    re, im = a.real, a.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return np.vstack([top, bot])


def from_real_embedding(y: np.ndarray) -> np.ndarray:
    """Recover the Hermitian matrix whose embedding averages to ``y``.

    Works for any symmetric ``y``: the result is the projection of ``y`` onto
    the embedded subspace, read back as a complex matrix.
    """
    y = np.asarray(y, dtype=float)
    d2 = y.shape[0]
    if d2 % 2:
        raise ValueError("embedded matrix must have even dimension")
    d = d2 // 2
    re = 0.5 * (y[:d, :d] + y[d:, d:])
    im = 0.5 * (y[d:, :d] - y[:d, d:])
    return re + 1.0j * im
