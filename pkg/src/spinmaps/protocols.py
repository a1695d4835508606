"""QND excitation-number detection, post-selection and the active
excitation-number stabilization protocol.

The stabilization register convention is ion 0 = ancilla (a qutrit whose
third level parks the ancilla outside the computational space), ions
1..N = system spins.  The protocol is open-loop: every gate is applied in
every run, and the halting branches are realized physically by incoherent
parking of the ancilla.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .channels import park_kraus_ops, pump_kraus_ops
from .observables import _excitation_numbers
from .register import (
    DensityOperator,
    RegisterError,
    RegisterLayout,
    apply_local_kraus,
    apply_local_operator,
)

PROJECTOR_MAX_N = 12


@dataclass(frozen=True)
class SubspaceProjector:
    """Projector onto the m-excitation subspace as a polynomial in S_z.

    ``alphas`` are the coefficients of sum_k alpha_k S_z^k with
    S_z = sum_i sigma_i^z; the matrix is diagonal with unit entries on
    computational states carrying exactly m up-spins.
    """

    n: int
    m: int
    alphas: tuple[float, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix)
        if np.max(np.abs(mat @ mat - mat)) > 1e-12:
            raise RegisterError("projector not idempotent")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise RegisterError("projector not Hermitian")
        if abs(np.trace(mat).real - comb(self.n, self.m)) > 1e-12:
            raise RegisterError("projector rank differs from C(N, m)")


def _lagrange_coefficients(m: int, n: int) -> list[Fraction]:
    """Exact coefficients of the polynomial that is 1 at S_z = 2m - N and 0
    at every other S_z eigenvalue 2k - N, solving the (N+1)-node linear
    system in exact rational arithmetic."""
    nodes = [Fraction(2 * k - n) for k in range(n + 1)]
    target = nodes[m]
    coeffs = [Fraction(1)]
    denom = Fraction(1)
    for node in nodes:
        if node == target:
            continue
        # multiply polynomial by (x - node)
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for p, c in enumerate(coeffs):
            nxt[p + 1] += c
            nxt[p] -= c * node
        coeffs = nxt
        denom *= target - node
    return [c / denom for c in coeffs]


def build_projector(m: int, n: int) -> SubspaceProjector:
    """Excitation-number projector P_m on N qubits.

    The coefficient vector solves the Vandermonde system over the S_z
    eigenvalues exactly; the matrix equals the brute-force sum of
    |b><b| over basis states with m up-spins.
    """
    if not 0 <= m <= n <= PROJECTOR_MAX_N:
        raise RegisterError(f"need 0 <= m <= N <= {PROJECTOR_MAX_N}, got m={m}, N={n}")
    alphas = _lagrange_coefficients(m, n)
    counts = _excitation_numbers(n)
    diag = (counts == m).astype(float)
    return SubspaceProjector(n, m, tuple(float(a) for a in alphas), np.diag(diag))


def _excitation_flags(n: int, predicate) -> np.ndarray:
    return predicate(_excitation_numbers(n))


def qnd_unitary(m0: int, n: int) -> np.ndarray:
    """exp(-i pi/2 P_{m0} (x) sigma_0^x) on (qubit ancilla, N system spins).

    Flips the ancilla (times -i) exactly on the m = m0 sector and acts as
    the identity elsewhere, so only the total excitation number is read out.
    """
    proj = build_projector(m0, n).matrix.astype(complex)
    dim = 2**n
    flip = np.array([[0, -1j], [-1j, 0]], dtype=complex)  # exp(-i pi/2 X)
    return np.kron(flip, proj) + np.kron(np.eye(2, dtype=complex), np.eye(dim) - proj)


def qnd_register(n: int) -> RegisterLayout:
    """Qubit ancilla at index 0 followed by N system spins."""
    return RegisterLayout((2,) + (2,) * n, ancilla_index=0)


def stabilization_register(n: int) -> RegisterLayout:
    """Qutrit ancilla at index 0 followed by N system spins."""
    return RegisterLayout((3,) + (2,) * n, ancilla_index=0)


def postselect(rho: DensityOperator, m0: int) -> tuple[DensityOperator | None, float]:
    """Project onto the m0-excitation subspace of a system register.

    Returns the renormalized post-measurement state and the success
    probability Tr(P rho); zero support is signaled as ``(None, 0.0)``.
    """
    n = rho.layout.n_ions
    if rho.layout.ion_dims != (2,) * n:
        raise RegisterError("postselect expects a system-only qubit register")
    mask = _excitation_numbers(n) == m0
    block = rho.matrix[np.ix_(mask, mask)]
    p = float(np.real(np.trace(block)))
    if p < 1e-12:
        return None, 0.0
    out = np.zeros_like(rho.matrix)
    out[np.ix_(mask, mask)] = block / p
    return DensityOperator(rho.layout, out), p


# --- stabilization internals -------------------------------------------------

_DETECT_GATE = np.array(
    [[0, -1j, 0], [-1j, 0, 0], [0, 0, 1]], dtype=complex
)  # exp(-i pi/2 X) on the qubit block of the qutrit ancilla

_ANCILLA_PI = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=complex)


def _swap_gate() -> np.ndarray:
    """Flip-flop pi-pulse on (qutrit ancilla, qubit site):
    |0,1> <-> -i |1,0>, everything else fixed."""
    u = np.eye(6, dtype=complex)
    u[1, 1] = u[2, 2] = 0.0
    u[2, 1] = u[1, 2] = -1j
    return u


def _check_stabilization_layout(rho: DensityOperator) -> int:
    layout = rho.layout
    if layout.ancilla_index != 0 or layout.ion_dims[0] != 3:
        raise RegisterError("stabilization requires a qutrit ancilla at index 0")
    n = layout.n_ions - 1
    if layout.ion_dims[1:] != (2,) * n:
        raise RegisterError("system ions must be qubits")
    return n


def _detector_conjugate(mat: np.ndarray, n: int, flags: np.ndarray) -> np.ndarray:
    """Conjugate by sum_b |b><b|_sys (x) (flip if flags[b] else 1)_ancilla."""
    dim_sys = 2**n
    gates = np.where(flags[:, None, None], _DETECT_GATE, np.eye(3, dtype=complex))
    t = mat.reshape(3, dim_sys, 3, dim_sys)
    out = np.einsum("bij,jbkc,clk->iblc", gates, t, gates.conj(), optimize=True)
    return out.reshape(3 * dim_sys, 3 * dim_sys)


def _cascade_sites(n: int, m0: int, removing: bool) -> list[int]:
    """Swap-cascade site order: 1, 2, ..., N-1, extended to N only in the
    edge cases (removal with m0 = 0, injection with m0 = N) where the last
    site can carry the only transferable excitation/hole."""
    sites = list(range(1, n))
    if (removing and m0 == 0) or (not removing and m0 == n):
        sites.append(n)
    return sites


def _stabilize_half(
    rho: DensityOperator, m0: int, removing: bool
) -> DensityOperator:
    n = _check_stabilization_layout(rho)
    if not 0 <= m0 <= n:
        raise RegisterError(f"m0 {m0} out of range for N={n}")
    dims = rho.layout.ion_dims
    counts = _excitation_numbers(n)
    flags = counts > m0 if removing else counts < m0
    park_level = 1 if removing else 0
    mat = rho.matrix
    if not removing:
        # pi-pulse exchanging the ancilla's computational states switches the
        # extraction circuit into the injection one
        mat = apply_local_operator(mat, _ANCILLA_PI, (0,), dims)
    mat = _detector_conjugate(mat, n, flags)
    park = park_kraus_ops(park_level)
    mat = apply_local_kraus(mat, park, (0,), dims)
    swap = _swap_gate()
    for site in _cascade_sites(n, m0, removing):
        mat = apply_local_operator(mat, swap, (0, site), dims)
        mat = apply_local_kraus(mat, park, (0,), dims)
    mat = apply_local_kraus(mat, pump_kraus_ops(3, 1), (0,), dims)
    mat = 0.5 * (mat + mat.conj().T)
    return DensityOperator(rho.layout, mat)



def stabilize_remove(rho: DensityOperator, m0: int) -> DensityOperator:
    """Open-loop removal of one excitation from every branch with m > m0.

    Ancilla must start in |1>.  Steps: excitation-number detector, parking
    of the no-error branch, swap cascade over sites 1, 2, ... with parking
    of successful extractions, final ancilla reset to |1>.  Branches with
    m <= m0, and in particular the full m0 block including its coherences,
    are left untouched.
    """
    return _stabilize_half(rho, m0, removing=True)


def stabilize_inject(rho: DensityOperator, m0: int) -> DensityOperator:
    """Open-loop injection of one excitation into every branch with m < m0.

    Mirror image of :func:`stabilize_remove` under exchange of the ancilla's
    computational states; deposits at the first empty site reached by the
    swap cascade.
    """
    return _stabilize_half(rho, m0, removing=False)


def stabilize(rho: DensityOperator, m0: int) -> DensityOperator:
    """Full stabilization round: removal, ancilla reset, injection."""
    out = stabilize_remove(rho, m0)
    mat = apply_local_kraus(out.matrix, pump_kraus_ops(3, 1), (0,), out.layout.ion_dims)
    out = DensityOperator(out.layout, mat)
    return stabilize_inject(out, m0)
