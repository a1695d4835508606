"""Generic CPTP machinery: Kraus channels, depolarizing noise, ancilla reset
and parking, Choi matrices and fidelity measures."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .register import (
    DensityOperator,
    PureState,
    RegisterError,
    RegisterLayout,
    apply_local_kraus,
    qubit_operator,
)

COMPLETENESS_TOL = 1e-10
CHOI_PSD_FLOOR = -1e-8


class ChannelError(ValueError):
    """Raised for invalid Kraus sets or mismatched dimensions."""


@dataclass(frozen=True)
class Channel:
    """Completely positive trace-preserving map given by a finite Kraus set."""

    layout: RegisterLayout
    kraus_ops: tuple[np.ndarray, ...]
    label: str = ""

    def __post_init__(self) -> None:
        d = self.layout.dim
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        object.__setattr__(self, "kraus_ops", ops)
        if not ops:
            raise ChannelError("channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (d, d):
                raise ChannelError(f"Kraus shape {k.shape} does not match dim {d}")
        total = sum(k.conj().T @ k for k in ops)
        err = np.max(np.abs(total - np.eye(d)))
        if err > COMPLETENESS_TOL:
            raise ChannelError(f"Kraus completeness violated by {err}")

    @property
    def dim(self) -> int:
        return self.layout.dim


@dataclass(frozen=True)
class ChoiMatrix:
    """Unit-trace Choi state of a channel (state normalization)."""

    matrix: np.ndarray
    input_dim: int

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d2 = self.input_dim**2
        if mat.shape != (d2, d2):
            raise ChannelError(f"Choi shape {mat.shape}, expected {(d2, d2)}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ChannelError("Choi matrix not Hermitian")
        if abs(np.trace(mat) - 1.0) > 1e-9:
            raise ChannelError("Choi matrix not unit trace")
        lo = float(np.min(np.linalg.eigvalsh(mat)))
        if lo < CHOI_PSD_FLOOR:
            raise ChannelError(f"Choi matrix not PSD: min eigenvalue {lo}")


def apply(channel: Channel, rho: DensityOperator) -> DensityOperator:
    """rho -> sum_k K rho K^dag on matching layouts."""
    if rho.layout.dim != channel.dim:
        raise ChannelError(
            f"channel dim {channel.dim} does not match state dim {rho.layout.dim}"
        )
    out = sum(k @ rho.matrix @ k.conj().T for k in channel.kraus_ops)
    return DensityOperator(rho.layout, out)


def apply_embedded(
    channel: Channel, rho: DensityOperator, sites: tuple[int, ...]
) -> DensityOperator:
    """Apply a channel supported on a sub-register at the given ion indices."""
    dims = tuple(channel.layout.ion_dims)
    target = tuple(rho.layout.ion_dims[s] for s in sites)
    if target != dims:
        raise ChannelError(f"channel ions {dims} do not fit register sites {target}")
    out = apply_local_kraus(rho.matrix, channel.kraus_ops, sites, rho.layout.ion_dims)
    return DensityOperator(rho.layout, out)


def unitary_channel(layout: RegisterLayout, u: np.ndarray, label: str = "") -> Channel:
    return Channel(layout, (np.asarray(u, dtype=complex),), label or "unitary")


def identity_channel(layout: RegisterLayout) -> Channel:
    return unitary_channel(layout, np.eye(layout.dim), "identity")


def mix(channels: list[Channel], weights: list[float]) -> Channel:
    """Convex mixture: Kraus sets scaled by sqrt(weight) and concatenated.

    The Choi matrix of the result is the weighted sum of the inputs' Choi
    matrices.
    """
    if len(channels) != len(weights):
        raise ChannelError("need one weight per channel")
    if any(w < 0 for w in weights):
        raise ChannelError("mixture weights must be non-negative")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ChannelError(f"weights sum to {sum(weights)}, expected 1")
    layout = channels[0].layout
    if any(c.layout.ion_dims != layout.ion_dims for c in channels):
        raise ChannelError("mixture requires identical layouts")
    ops: list[np.ndarray] = []
    for c, w in zip(channels, weights):
        if w == 0.0:
            continue
        ops.extend(np.sqrt(w) * k for k in c.kraus_ops)
    label = "mix(" + ", ".join(f"{w:g}*{c.label}" for c, w in zip(channels, weights)) + ")"
    return Channel(layout, tuple(ops), label)


def compose(first: Channel, second: Channel, label: str = "") -> Channel:
    """Channel applying ``first`` then ``second`` (Kraus products expanded)."""
    if first.layout.ion_dims != second.layout.ion_dims:
        raise ChannelError("composition requires identical layouts")
    ops = tuple(b @ a for b in second.kraus_ops for a in first.kraus_ops)
    return Channel(first.layout, ops, label or f"{second.label}.{first.label}")


def depolarizing_channel(layout: RegisterLayout, ions: tuple[int, ...]) -> Channel:
    """Fully depolarizing channel on each listed qubit ion.

    Single-ion Kraus set {1, X, Y, Z}/2; multiple ions concatenate (the
    two-ion case is the double-depolarizing map used by the noise model).
    """
    for i in ions:
        if layout.ion_dims[i] != 2:
            raise ChannelError("depolarizing channel defined on qubit ions only")
    paulis = [np.eye(2, dtype=complex)] + [qubit_operator(ax) for ax in "xyz"]
    ops = []
    for combo in product(range(4), repeat=len(ions)):
        full = np.array([[0.5 ** len(ions)]], dtype=complex)
        for ion, d in enumerate(layout.ion_dims):
            if ion in ions:
                full = np.kron(full, paulis[combo[ions.index(ion)]])
            else:
                full = np.kron(full, np.eye(d, dtype=complex))
        ops.append(full)
    return Channel(layout, tuple(ops), f"depolarize{ions}")


def pump_kraus_ops(dim: int, target: int) -> tuple[np.ndarray, ...]:
    """Kraus set pumping every level of a ``dim``-level ion into ``target``."""
    ops = []
    for k in range(dim):
        op = np.zeros((dim, dim), dtype=complex)
        op[target, k] = 1.0
        ops.append(op)
    return tuple(ops)


def reset_channel(
    layout: RegisterLayout, ion: int, target_level: int = 1
) -> Channel:
    """Optical-pumping reset of one ion into ``target_level``.

    For a qubit this is the Kraus set {|1><1|, |1><0|}; for a qutrit ancilla
    the parking level is pumped back as well so the reset leaves the ion in a
    known pure state regardless of prior branching.
    """
    dim = layout.ion_dims[ion]
    if not 0 <= target_level < dim:
        raise ChannelError(f"target level {target_level} out of range")
    ops = []
    for local in pump_kraus_ops(dim, target_level):
        full = np.array([[1.0]], dtype=complex)
        for j, d in enumerate(layout.ion_dims):
            full = np.kron(full, local if j == ion else np.eye(d, dtype=complex))
        ops.append(full)
    return Channel(layout, tuple(ops), f"reset({ion}->{target_level})")


def reset_ancilla(
    rho: DensityOperator, ancilla_index: int, target_level: int = 1
) -> DensityOperator:
    """Incoherently reinitialize the ancilla ion into ``target_level``."""
    layout = rho.layout
    if not 0 <= ancilla_index < layout.n_ions:
        raise ChannelError(f"ancilla index {ancilla_index} out of range")
    dim = layout.ion_dims[ancilla_index]
    kraus = pump_kraus_ops(dim, target_level)
    out = apply_local_kraus(rho.matrix, kraus, (ancilla_index,), layout.ion_dims)
    return DensityOperator(layout, out)


def park_kraus_ops(source_level: int) -> tuple[np.ndarray, ...]:
    other = 1 - source_level
    k_move = np.zeros((3, 3), dtype=complex)
    k_move[2, source_level] = 1.0
    k_keep = np.zeros((3, 3), dtype=complex)
    k_keep[other, other] = 1.0
    k_parked = np.zeros((3, 3), dtype=complex)
    k_parked[2, 2] = 1.0
    return (k_move, k_keep, k_parked)


def park_from(
    rho: DensityOperator, ancilla_index: int, source_level: int
) -> DensityOperator:
    """Uni-directionally pump the ancilla's ``source_level`` into parking |2>.

    Population already parked stays parked (the operation is idempotent);
    the other computational level is untouched.
    """
    layout = rho.layout
    if source_level not in (0, 1):
        raise ChannelError("source level must be a computational level (0 or 1)")
    if layout.ion_dims[ancilla_index] != 3:
        raise ChannelError("parking requires a qutrit ancilla")
    out = apply_local_kraus(
        rho.matrix, park_kraus_ops(source_level), (ancilla_index,), layout.ion_dims
    )
    return DensityOperator(layout, out)


def park_channel(layout: RegisterLayout, ion: int, source_level: int) -> Channel:
    """Channel form of :func:`park_from` (for Choi-level idempotence checks)."""
    if layout.ion_dims[ion] != 3:
        raise ChannelError("parking requires a qutrit ancilla")
    ops = []
    for local in park_kraus_ops(source_level):
        full = np.array([[1.0]], dtype=complex)
        for j, d in enumerate(layout.ion_dims):
            full = np.kron(full, local if j == ion else np.eye(d, dtype=complex))
        ops.append(full)
    return Channel(layout, tuple(ops), f"park({ion}, from {source_level})")


def choi(channel: Channel) -> ChoiMatrix:
    """Unit-trace Choi state (E (x) id applied to the maximally entangled state)."""
    d = channel.dim
    mat = np.zeros((d * d, d * d), dtype=complex)
    for k in channel.kraus_ops:
        v = k.reshape(-1)
        mat += np.outer(v, v.conj())
    return ChoiMatrix(mat / d, d)


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _uhlmann(a: np.ndarray, b: np.ndarray) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2, clipped into [0, 1].

    Eigenvalues below 1e-12 of the spectral maximum are treated as exact
    zeros; square roots would otherwise amplify rank-deficiency noise.
    """
    sa = _sqrtm_psd(a)
    inner = sa @ b @ sa
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    floor = max(float(vals.max()), 0.0) * 1e-12
    vals = np.where(vals > floor, vals, 0.0)
    f = float(np.sum(np.sqrt(vals)) ** 2)
    return min(max(f, 0.0), 1.0)


def uhlmann_fidelity(rho1: DensityOperator, rho2: DensityOperator) -> float:
    if rho1.layout.dim != rho2.layout.dim:
        raise ChannelError("fidelity requires matching dimensions")
    return _uhlmann(rho1.matrix, rho2.matrix)


def process_fidelity(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Uhlmann fidelity of the two normalized Choi states."""
    if a.input_dim != b.input_dim:
        raise ChannelError("process fidelity requires matching dimensions")
    return _uhlmann(a.matrix, b.matrix)


def choi_distance(a: ChoiMatrix, b: ChoiMatrix) -> float:
    """Frobenius distance between normalized Choi matrices."""
    if a.input_dim != b.input_dim:
        raise ChannelError("Choi distance requires matching dimensions")
    return float(np.linalg.norm(a.matrix - b.matrix))


def trace_distance(rho1: DensityOperator, rho2: DensityOperator) -> float:
    """(1/2) || rho1 - rho2 ||_1."""
    diff = rho1.matrix - rho2.matrix
    vals = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(vals)))


def mean_state_fidelity(
    channel: Channel, reference_channel: Channel, input_set: list[DensityOperator]
) -> float:
    """Average output-state Uhlmann fidelity over a set of probe inputs."""
    if not input_set:
        raise ChannelError("input set must be non-empty")
    total = 0.0
    for rho in input_set:
        total += uhlmann_fidelity(apply(channel, rho), apply(reference_channel, rho))
    return total / len(input_set)


def pauli_eigenstate_products(layout: RegisterLayout) -> list[DensityOperator]:
    """All products of single-qubit X/Y/Z eigenstates (6^n states).

    For two qubits this is the 36-state probe ensemble used to quote mean
    state fidelities of noisy maps.
    """
    if any(d != 2 for d in layout.ion_dims):
        raise ChannelError("Pauli eigenstates defined for qubit registers")
    s = np.sqrt(0.5)
    single = [
        np.array([1, 0], dtype=complex),        # z-down
        np.array([0, 1], dtype=complex),        # z-up
        np.array([s, s], dtype=complex),        # x+
        np.array([s, -s], dtype=complex),       # x-
        np.array([s, 1j * s], dtype=complex),   # y+
        np.array([s, -1j * s], dtype=complex),  # y-
    ]
    states = []
    for combo in product(single, repeat=layout.n_ions):
        vec = np.array([1.0], dtype=complex)
        for factor in combo:
            vec = np.kron(vec, factor)
        states.append(PureState(layout, vec).density())
    return states
