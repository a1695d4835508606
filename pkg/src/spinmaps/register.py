"""Hilbert-space bookkeeping for mixed qubit/qutrit ion registers.

Conventions used throughout the package:

* Ion 0 is the leftmost tensor factor; a basis index is the mixed-radix
  number built from the per-ion occupations, ion 0 most significant.
* The qubit levels are ``|0> = down`` and ``|1> = up``; ``|1>`` is the spin
  excitation.  Hence ``sigma_z = |1><1| - |0><0| = diag(-1, +1)``.
* A qutrit ion carries the extra "parking" level ``|2>``.  Qubit operators
  embedded into a qutrit act on span{|0>, |1>} and annihilate ``|2>``;
  identity factors keep ``|2>`` untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_FLOOR = -1e-8
NORM_TOL = 1e-12

# 2x2 qubit operators in the (|0>, |1>) basis.
_SIGMA = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 0], [1, 0]], dtype=complex),   # |1><0|
    "-": np.array([[0, 1], [0, 0]], dtype=complex),   # |0><1|
    "up": np.array([[0, 0], [0, 1]], dtype=complex),  # |1><1|
    "down": np.array([[1, 0], [0, 0]], dtype=complex),  # |0><0|
}

PAULI_AXES = ("x", "y", "z", "+", "-", "up", "down")


class RegisterError(ValueError):
    """Raised for malformed layouts, states or operators."""


def qubit_operator(axis: str) -> np.ndarray:
    """Return a copy of the 2x2 matrix for one of the supported axes."""
    try:
        return _SIGMA[axis].copy()
    except KeyError:
        raise RegisterError(f"unknown Pauli axis {axis!r}") from None


def _embed_qutrit(op2: np.ndarray) -> np.ndarray:
    """Lift a 2x2 qubit operator to a qutrit: act on {|0>,|1>}, kill |2>."""
    out = np.zeros((3, 3), dtype=complex)
    out[:2, :2] = op2
    return out


@dataclass(frozen=True)
class RegisterLayout:
    """Level structure of an ion register.

    ``ion_dims[i]`` is 2 for a qubit ion and 3 for a qutrit ion whose third
    level is the parking state.  ``ancilla_index`` optionally designates one
    ion as the ancilla used by engineered dissipation and the feedback
    protocols (by convention index 0 when present).
    """

    ion_dims: tuple[int, ...]
    ancilla_index: int | None = None

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.ion_dims)
        object.__setattr__(self, "ion_dims", dims)
        if not dims:
            raise RegisterError("register needs at least one ion")
        if any(d not in (2, 3) for d in dims):
            raise RegisterError(f"ion dimensions must be 2 or 3, got {dims}")
        if self.ancilla_index is not None and not 0 <= self.ancilla_index < len(dims):
            raise RegisterError(f"ancilla index {self.ancilla_index} out of range")

    @property
    def n_ions(self) -> int:
        return len(self.ion_dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.ion_dims))

    def index_of(self, occupation: Sequence[int]) -> int:
        """Mixed-radix basis index of a product state, ion 0 most significant."""
        if len(occupation) != self.n_ions:
            raise RegisterError(
                f"occupation has {len(occupation)} entries for {self.n_ions} ions"
            )
        idx = 0
        for level, d in zip(occupation, self.ion_dims):
            if not 0 <= level < d:
                raise RegisterError(f"level {level} out of range for ion of dim {d}")
            idx = idx * d + level
        return idx

    def occupation_of(self, index: int) -> tuple[int, ...]:
        """Inverse of :meth:`index_of`."""
        occ = []
        for d in reversed(self.ion_dims):
            occ.append(index % d)
            index //= d
        return tuple(reversed(occ))


def qubit_register(n: int, ancilla_index: int | None = None) -> RegisterLayout:
    """Layout of ``n`` qubit ions."""
    return RegisterLayout((2,) * n, ancilla_index)


def system_with_ancilla(n_system: int, ancilla_dim: int = 3) -> RegisterLayout:
    """Ancilla ion at index 0 followed by ``n_system`` qubit spins."""
    return RegisterLayout((ancilla_dim,) + (2,) * n_system, ancilla_index=0)


@dataclass(frozen=True)
class PureState:
    """State vector on a register, unit norm to 1e-12."""

    layout: RegisterLayout
    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=complex).reshape(-1)
        object.__setattr__(self, "vector", vec)
        if vec.shape != (self.layout.dim,):
            raise RegisterError(
                f"vector length {vec.size} does not match layout dim {self.layout.dim}"
            )
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > NORM_TOL:
            raise RegisterError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")

    def density(self) -> "DensityOperator":
        return DensityOperator(self.layout, np.outer(self.vector, self.vector.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Positive, unit-trace operator on a register.

    Construction validates Hermiticity (1e-10), unit trace (1e-10) and
    positivity (smallest eigenvalue >= -1e-8).
    """

    layout: RegisterLayout
    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise RegisterError(f"matrix shape {mat.shape} does not match dim {d}")
        herm = np.max(np.abs(mat - mat.conj().T)) if d else 0.0
        if herm > HERMITICITY_TOL:
            raise RegisterError(f"matrix deviates from Hermitian by {herm}")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise RegisterError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
        lo = float(np.min(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))))
        if lo < POSITIVITY_FLOOR:
            raise RegisterError(f"smallest eigenvalue {lo} below {POSITIVITY_FLOOR}")

    def tensor(self) -> np.ndarray:
        """Matrix reshaped to one ket and one bra axis per ion."""
        dims = self.layout.ion_dims
        return self.matrix.reshape(dims + dims)


@dataclass(frozen=True)
class PauliString:
    """Product of single-ion qubit operators with a complex prefactor.

    Factors are ``(ion_index, axis)`` pairs with distinct ions and axes from
    ``{x, y, z, +, -, up, down}`` (``up``/``down`` are the |1><1| and |0><0|
    projectors).  On qutrit ions the factor acts on the qubit block and
    annihilates the parking level.
    """

    factors: tuple[tuple[int, str], ...]
    coefficient: complex = 1.0

    def __post_init__(self) -> None:
        facs = tuple((int(i), str(ax)) for i, ax in self.factors)
        object.__setattr__(self, "factors", facs)
        ions = [i for i, _ in facs]
        if len(set(ions)) != len(ions):
            raise RegisterError("PauliString ion indices must be distinct")
        for _, ax in facs:
            if ax not in _SIGMA or ax == "i":
                raise RegisterError(f"unknown Pauli axis {ax!r}")

    def ions(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.factors)

    def axis_on(self, ion: int) -> str | None:
        for i, ax in self.factors:
            if i == ion:
                return ax
        return None


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Symbolic product ``a . b`` (operator composition, a applied after b).

    The single-qubit algebra over the supported axes is closed up to complex
    scalars; identity factors drop out and an exactly vanishing product is
    returned as the empty string with coefficient 0.
    """
    coeff = complex(a.coefficient) * complex(b.coefficient)
    factors: list[tuple[int, str]] = []
    for ion in sorted(set(a.ions()) | set(b.ions())):
        ax_a, ax_b = a.axis_on(ion), b.axis_on(ion)
        if ax_b is None:
            factors.append((ion, ax_a))
            continue
        if ax_a is None:
            factors.append((ion, ax_b))
            continue
        prod = _SIGMA[ax_a] @ _SIGMA[ax_b]
        if np.allclose(prod, 0):
            return PauliString((), 0.0)
        for name, mat in _SIGMA.items():
            scale = prod[np.abs(mat) > 0.5] / mat[np.abs(mat) > 0.5] if np.any(np.abs(mat) > 0.5) else []
            if len(scale) and np.allclose(prod, scale[0] * mat):
                coeff *= scale[0]
                if name != "i":
                    factors.append((ion, name))
                break
        else:  # pragma: no cover - algebra is closed
            raise RegisterError("product left the Pauli axis algebra")
    return PauliString(tuple(factors), coeff)


def basis_state(layout: RegisterLayout, occupation: Sequence[int]) -> PureState:
    """Computational product state with the given per-ion levels."""
    vec = np.zeros(layout.dim, dtype=complex)
    vec[layout.index_of(occupation)] = 1.0
    return PureState(layout, vec)


def embed(op: PauliString, layout: RegisterLayout) -> np.ndarray:
    """Dense matrix of a Pauli string on the full register.

    Uninvolved ions carry the identity (including the parking level of
    qutrits); involved qutrit ions carry the qubit-block operator that
    annihilates |2>.
    """
    for ion, _ in op.factors:
        if not 0 <= ion < layout.n_ions:
            raise RegisterError(f"ion {ion} out of range")
    out = np.array([[op.coefficient]], dtype=complex)
    for ion, d in enumerate(layout.ion_dims):
        ax = op.axis_on(ion)
        if ax is None:
            factor = np.eye(d, dtype=complex)
        else:
            factor = _SIGMA[ax] if d == 2 else _embed_qutrit(_SIGMA[ax])
        out = np.kron(out, factor)
    return out


def _moved_axes(n: int, sites: Sequence[int]) -> tuple[list[int], list[int]]:
    """Permutation bringing ket/bra axes of ``sites`` to the front."""
    rest = [i for i in range(n) if i not in sites]
    ket = list(sites) + rest
    bra = [n + i for i in ket]
    return ket, bra


def apply_local_operator(
    rho_mat: np.ndarray,
    op: np.ndarray,
    sites: Sequence[int],
    dims: Sequence[int],
    op_right: np.ndarray | None = None,
) -> np.ndarray:
    """Compute ``A rho B`` where A acts on ``sites`` only (B defaults to A^dag).

    Works on raw matrices so intermediate steps of composite maps avoid
    re-validating the state after every factor.
    """
    n = len(dims)
    dims = tuple(dims)
    d_loc = int(np.prod([dims[s] for s in sites]))
    rest = [i for i in range(n) if i not in sites]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    ket, bra = _moved_axes(n, sites)
    perm = ket + bra
    t = rho_mat.reshape(dims + dims).transpose(perm).reshape(d_loc, d_rest, d_loc, d_rest)
    right = op.conj().T if op_right is None else op_right
    t = np.einsum("ab,bicj,cd->aidj", op, t, right, optimize=True)
    t = t.reshape([dims[i] for i in ket] + [dims[i] for i in ket])
    inv = np.argsort(perm)
    d = int(np.prod(dims))
    return t.transpose(inv).reshape(d, d)


def embed_operator(
    op: np.ndarray, sites: Sequence[int], dims: Sequence[int]
) -> np.ndarray:
    """Dense embedding of a local operator at ``sites`` (identity elsewhere)."""
    d = int(np.prod(dims))
    d_loc = int(np.prod([dims[s] for s in sites]))
    if op.shape != (d_loc, d_loc):
        raise RegisterError(f"operator shape {op.shape} does not fit sites {sites}")
    return apply_local_operator(
        np.eye(d, dtype=complex), op, sites, dims, op_right=np.eye(d_loc, dtype=complex)
    )


def apply_local_kraus(
    rho_mat: np.ndarray,
    kraus: Iterable[np.ndarray],
    sites: Sequence[int],
    dims: Sequence[int],
) -> np.ndarray:
    """Apply ``rho -> sum_k K rho K^dag`` with every K supported on ``sites``.

    The Kraus sum is contracted as a single superoperator on the local
    factor, so the full state is permuted only once per channel
    application.
    """
    n = len(dims)
    dims = tuple(dims)
    sites = list(sites)
    d_loc = int(np.prod([dims[s] for s in sites]))
    rest = [i for i in range(n) if i not in sites]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    ket, _ = _moved_axes(n, sites)
    perm = ket + [n + i for i in ket]
    t = rho_mat.reshape(dims + dims).transpose(perm)
    t = t.reshape(d_loc, d_rest, d_loc, d_rest).transpose(0, 2, 1, 3)
    t = t.reshape(d_loc * d_loc, d_rest * d_rest)
    superop = np.zeros((d_loc * d_loc, d_loc * d_loc), dtype=complex)
    for k in kraus:
        superop += np.kron(k, k.conj())
    t = (superop @ t).reshape(d_loc, d_loc, d_rest, d_rest).transpose(0, 2, 1, 3)
    t = t.reshape([dims[i] for i in ket] + [dims[i] for i in ket])
    d = int(np.prod(dims))
    return t.transpose(np.argsort(perm)).reshape(d, d)


def partial_trace(rho: DensityOperator, ions: Iterable[int]) -> DensityOperator:
    """Trace out the given ions, returning the reduced state on the rest."""
    traced = sorted(set(int(i) for i in ions))
    layout = rho.layout
    for i in traced:
        if not 0 <= i < layout.n_ions:
            raise RegisterError(f"ion {i} out of range")
    keep = [i for i in range(layout.n_ions) if i not in traced]
    if not keep:
        raise RegisterError("cannot trace out the whole register")
    t = rho.tensor()
    n = layout.n_ions
    for offset, i in enumerate(traced):
        ax = i - offset
        t = np.trace(t, axis1=ax, axis2=ax + (n - offset))
    anc = layout.ancilla_index
    new_layout = RegisterLayout(
        tuple(layout.ion_dims[i] for i in keep),
        ancilla_index=keep.index(anc) if anc in keep else None,
    )
    d = new_layout.dim
    return DensityOperator(new_layout, t.reshape(d, d))


def expectation(rho: DensityOperator, op: PauliString | np.ndarray) -> complex:
    """Tr(op rho); real to 1e-10 for Hermitian op."""
    mat = embed(op, rho.layout) if isinstance(op, PauliString) else np.asarray(op)
    if mat.shape != rho.matrix.shape:
        raise RegisterError(
            f"operator shape {mat.shape} does not match state {rho.matrix.shape}"
        )
    return complex(np.einsum("ij,ji->", mat, rho.matrix))
