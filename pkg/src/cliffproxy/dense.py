"""Exact small-n channel mathematics: statevectors, transfer matrices,
process/average fidelity, Choi matrices, and diamond distance.

Transfer matrices ("Ptm") are real 4^n x 4^n in the normalised Pauli basis,
ordered lexicographically in (I, X, Y, Z) per qubit with qubit 0 slowest,
matching the label order of :mod:`cliffproxy.pauli`; entries are
Tr(P_i E(P_j)) / 2^n.  With that normalisation the diagonal of a Pauli
channel's transfer matrix is exactly the Walsh transform of its
probability vector.

Computational-basis integers put qubit 0 on the most significant bit.
Dense transfer matrices are capped at n <= 4 and the diamond-norm SDP at
n <= 3 (n = 3 already takes minutes); statevector simulation runs to
n <= 14 by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import sdp
from .circuits import (
    EulerGate1Q,
    LayeredCircuit,
    OneQubitLayer,
    TwoQubitLayer,
    gate_unitary,
)
from .clifford import RX90 as _RX90
from .noise import NoiseModel, SpamModel, layer_channel
from .pauli import PauliChannel, PauliString

__all__ = [
    "Ptm",
    "ChoiMatrix",
    "Statevector",
    "PTM_LIMIT",
    "STATEVECTOR_LIMIT",
    "circuit_unitary",
    "ptm_of_unitary",
    "circuit_ptm",
    "process_fidelity",
    "average_fidelity",
    "choi_of_ptm",
    "diamond_distance",
    "pauli_channel_diamond",
    "apply_circuit",
    "apply_pauli",
    "statevector_simulate",
    "ideal_output_probs",
]

PTM_LIMIT = 4
DIAMOND_LIMIT = 3
STATEVECTOR_LIMIT = 14


@dataclass(frozen=True, eq=False)
class Ptm:
    """Real transfer matrix of an n-qubit channel in the Pauli basis."""

    n: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.shape != (4**self.n, 4**self.n):
            raise ValueError(f"expected {4 ** self.n} x {4 ** self.n} matrix")
        object.__setattr__(self, "mat", m)

    @property
    def is_trace_preserving(self) -> bool:
        first = np.zeros(4**self.n)
        first[0] = 1.0
        return bool(np.max(np.abs(self.mat[0] - first)) < 1e-10)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix (output factor first); trace 2^n for CPTP maps."""

    n: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.shape != (4**self.n, 4**self.n):
            raise ValueError(f"expected {4 ** self.n} x {4 ** self.n} matrix")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("Choi matrix must be Hermitian")
        object.__setattr__(self, "mat", m)


@dataclass(frozen=True, eq=False)
class Statevector:
    n: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (2**self.n,):
            raise ValueError(f"expected {2 ** self.n} amplitudes")
        norm = float(np.linalg.norm(a))
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} is not 1")
        object.__setattr__(self, "amps", a)


@lru_cache(maxsize=8)
def _pauli_stack(n: int) -> np.ndarray:
    """All 4^n Pauli matrices stacked in label order."""
    singles = [
        np.eye(2, dtype=complex),
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    stack = np.array([[[1.0]]], dtype=complex)
    for _ in range(n):
        stack = np.einsum("kab,lcd->klacbd", stack, np.array(singles)).reshape(
            -1, stack.shape[1] * 2, stack.shape[1] * 2
        )
    return stack


def apply_1q(state: np.ndarray, u: np.ndarray, qubit: int, n: int) -> np.ndarray:
    t = state.reshape(2**qubit, 2, -1)
    return np.einsum("ab,ibj->iaj", u, t).reshape(state.shape)


def apply_2q(state: np.ndarray, u4: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = state.reshape((2,) * n + state.shape[1:])
    t = np.moveaxis(t, (a, b), (0, 1))
    rest = t.shape[2:]
    t = t.reshape(4, -1)
    t = (u4 @ t).reshape((2, 2) + rest)
    t = np.moveaxis(t, (0, 1), (a, b))
    return t.reshape(state.shape)


def _parity(values: np.ndarray, mask: int) -> np.ndarray:
    v = (values & np.int64(mask)).astype(np.int64)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> shift
    return (v & 1).astype(np.int64)


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    """Apply a signed Pauli to a statevector (qubit 0 = msb)."""
    n = p.n
    xmask = zmask = 0
    n_y = 0
    for q in range(n):
        bitpos = n - 1 - q
        code = p.code(q)
        if code in (1, 2):
            xmask |= 1 << bitpos
        if code in (2, 3):
            zmask |= 1 << bitpos
        if code == 2:
            n_y += 1
    idx = np.arange(len(state), dtype=np.int64)
    out = state[idx ^ xmask].copy()
    signs = 1.0 - 2.0 * _parity(idx, zmask)
    out *= signs
    out *= p.phase * (-1j) ** n_y
    return out


def apply_circuit(state: np.ndarray, circuit: LayeredCircuit) -> np.ndarray:
    """Noiseless application of all circuit layers."""
    for layer in circuit.layers:
        state = apply_circuit_layer(state, layer, circuit.n)
    return state


@lru_cache(maxsize=4)
def _entangler_unitary(gate: str) -> np.ndarray:
    if gate == "CZ":
        return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    if gate == "CNOT":
        m = np.eye(4, dtype=complex)
        m[[2, 3]] = m[[3, 2]]
        return m
    raise ValueError(f"unsupported entangling gate {gate!r}")


def circuit_unitary(circuit: LayeredCircuit) -> np.ndarray:
    """Dense unitary of the whole circuit (small n only)."""
    if circuit.n > 2 * PTM_LIMIT:
        raise ValueError("dense unitary requested for too many qubits")
    dim = 2**circuit.n
    return apply_circuit(np.eye(dim, dtype=complex), circuit)


def ptm_of_unitary(u: np.ndarray, n: int) -> Ptm:
    if n > PTM_LIMIT:
        raise ValueError(f"dense transfer matrices capped at n={PTM_LIMIT}")
    stack = _pauli_stack(n)
    conj = np.einsum("ab,kbc,dc->kad", u, stack, np.conj(u))
    mat = np.real(np.einsum("iab,kba->ik", stack, conj)) / 2**n
    return Ptm(n, mat)


def _layer_unitary(layer, n: int) -> np.ndarray:
    dim = 2**n
    return apply_circuit_layer(np.eye(dim, dtype=complex), layer, n)


def apply_circuit_layer(state: np.ndarray, layer, n: int) -> np.ndarray:
    if isinstance(layer, OneQubitLayer):
        for q, gate in enumerate(layer.gates):
            state = apply_1q(state, gate_unitary(gate), q, n)
    else:
        u4 = _entangler_unitary(layer.gate)
        for a, b in layer.pairs:
            state = apply_2q(state, u4, a, b, n)
    return state


def _spam_eigenvalues(n: int, factors: list[float]) -> np.ndarray:
    """Transfer-matrix diagonal of a tensor product of X-flip channels."""
    eig = np.ones(4**n)
    labels = np.arange(4**n)
    for q, f in enumerate(factors):
        codes = (labels >> (2 * (n - 1 - q))) & 3
        eig *= np.where((codes == 2) | (codes == 3), f, 1.0)
    return eig


def _rz(phi: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * phi), 0], [0, np.exp(0.5j * phi)]], dtype=complex
    )


def _gate_error_ptm_1q(noise: NoiseModel, position: int, qubit: int, gate) -> np.ndarray:
    """Exact 4x4 transfer matrix of one gate's X90 error channels.

    Both faults are pushed through the remaining pulse factors of the gate
    itself.  For Clifford gates that push is a Pauli relabelling and the
    result is the compiled Pauli channel; for Euler gates the conjugated
    channels are genuine unitary mixtures and the result is not diagonal.
    """
    from .circuits import CliffordGate1Q
    from .pauli import pauli_walsh

    if isinstance(gate, CliffordGate1Q):
        return np.diag(pauli_walsh(noise.compiled_1q_channel(position, qubit, gate), 1))
    eps = noise.xpi2_noise(position, qubit).probs
    diag = np.diag(pauli_walsh(eps, 1))
    phi1, phi2, _ = gate.angles
    r_first = ptm_of_unitary(_rz(phi1) @ _RX90 @ _rz(phi2), 1).mat
    r_second = ptm_of_unitary(_rz(phi1), 1).mat
    # the first (earlier) fault conjugates through Z(phi2), X90, Z(phi1);
    # the second only through Z(phi1); the second acts after the first
    return (r_second @ diag @ r_second.T) @ (r_first @ diag @ r_first.T)


def circuit_ptm(
    circuit: LayeredCircuit,
    noise: NoiseModel | None = None,
    spam: SpamModel | None = None,
    layer_offset: int = 0,
) -> Ptm:
    """Transfer matrix of the (optionally noisy) circuit, n <= 4.

    Layer errors multiply in as diagonal transfer matrices after each
    layer; SPAM appears as boundary bit-flip channels.
    """
    n = circuit.n
    if n > PTM_LIMIT:
        raise ValueError(f"dense transfer matrices capped at n={PTM_LIMIT}")
    mat = np.eye(4**n)
    if spam is not None:
        mat = mat * _spam_eigenvalues(n, [spam.prep_factor(q) for q in range(n)])[None, :]
    for i, layer in enumerate(circuit.layers):
        mat = ptm_of_unitary(_layer_unitary(layer, n), n).mat @ mat
        if noise is None:
            continue
        pos = i + layer_offset
        if isinstance(layer, OneQubitLayer):
            err = np.array([[1.0]])
            for q, gate in enumerate(layer.gates):
                err = np.kron(err, _gate_error_ptm_1q(noise, pos, q, gate))
            mat = err @ mat
        else:
            chan = layer_channel(circuit, i, noise, layer_offset)
            mat = chan.dense_eigenvalues()[:, None] * mat
    if spam is not None:
        mat = _spam_eigenvalues(n, [spam.meas_factor(q) for q in range(n)])[:, None] * mat
    return Ptm(n, mat)


def process_fidelity(ideal: Ptm, noisy: Ptm) -> float:
    """Tr(ideal^T noisy) / 4^n."""
    if ideal.n != noisy.n:
        raise ValueError(f"size mismatch: {ideal.n} vs {noisy.n}")
    return float(np.trace(ideal.mat.T @ noisy.mat)) / 4**ideal.n


def average_fidelity(f_pro: float, n: int) -> float:
    """Haar-average state fidelity from the process fidelity."""
    dim = 2**n
    lo = -1.0 / (4**n - 1)
    if not lo - 1e-12 <= f_pro <= 1.0 + 1e-12:
        raise ValueError(f"process fidelity {f_pro} outside [{lo}, 1]")
    return (dim * f_pro + 1.0) / (dim + 1.0)


def choi_of_ptm(ptm: Ptm) -> ChoiMatrix:
    """Choi matrix (output factor first) of a transfer matrix."""
    n = ptm.n
    dim = 2**n
    stack = _pauli_stack(n)
    # E(e_ij) expanded over the Pauli basis, then J = sum_l P_l (x) T_l^T
    t = np.einsum("lk,kji->lji", ptm.mat, stack) / dim
    j = np.einsum("lab,lji->aibj", stack.astype(complex), t).reshape(dim * dim, dim * dim)
    # aibj ordering: rows (a, i), cols (b, j) with the output index first
    return ChoiMatrix(n, j)


def diamond_distance(
    ideal: Ptm,
    noisy: Ptm,
    gap_tol: float = 1e-9,
    gap_required: float = 1e-8,
) -> sdp.DiamondResult:
    """Half diamond-norm distance between two channels via the SDP.

    Exact for n <= 2 in well under a second; n = 3 is supported but takes
    minutes per call because the Newton systems are dense in 4^3-dimensional
    Hermitian space.
    """
    if ideal.n != noisy.n:
        raise ValueError(f"size mismatch: {ideal.n} vs {noisy.n}")
    if ideal.n > DIAMOND_LIMIT:
        raise ValueError(f"diamond-norm SDP capped at n={DIAMOND_LIMIT}")
    delta = choi_of_ptm(noisy).mat - choi_of_ptm(ideal).mat
    return sdp.solve_diamond_sdp(
        delta, 2**ideal.n, gap_tol=gap_tol, gap_required=gap_required
    )


def pauli_channel_diamond(channel: PauliChannel) -> float:
    """Closed form for Pauli error channels: 1 - p_identity."""
    return channel.infidelity


def matrix_to_csv(mat: np.ndarray, path: str) -> None:
    """Row-major CSV dump with shortest round-trip decimal strings."""
    mat = np.asarray(mat)
    with open(path, "w") as fh:
        for row in mat:
            fh.write(",".join(repr(complex(v)) if np.iscomplexobj(mat) else repr(float(v)) for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# statevector simulation
# ---------------------------------------------------------------------------


def _zero_state(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = 1.0
    return v


def ideal_output_probs(circuit: LayeredCircuit) -> np.ndarray:
    """Exact |amplitude|^2 vector of the noiseless circuit on |0...0>."""
    if circuit.n > STATEVECTOR_LIMIT:
        raise ValueError(f"statevector simulation capped at n={STATEVECTOR_LIMIT}")
    amps = apply_circuit(_zero_state(circuit.n), circuit)
    return np.abs(amps) ** 2


def statevector_simulate(
    circuit: LayeredCircuit,
    noise: NoiseModel | None,
    rng: np.random.Generator,
    shots: int,
    spam: SpamModel | None = None,
    layer_offset: int = 0,
) -> np.ndarray:
    """Sample measured bitstrings from the noisy circuit.

    Each shot draws one Pauli fault per layer (Monte Carlo unravelling of
    the stochastic layer errors) plus SPAM bit flips.  Shots sharing a
    fault pattern reuse one statevector run, so the common no-fault case is
    simulated once.  Returns integers with qubit 0 on the most significant
    bit.
    """
    n = circuit.n
    if n > STATEVECTOR_LIMIT:
        raise ValueError(f"statevector simulation capped at n={STATEVECTOR_LIMIT}")
    if shots < 1:
        raise ValueError("need at least one shot")

    # draw local fault labels for all shots and group identical patterns;
    # prep flips enter as X faults before the first layer (index -1);
    # faults on Euler gates sit at their X90 pulse positions inside the gate,
    # faults on Clifford gates use the exactly-equivalent compiled channel
    draws: list[tuple] = []
    if spam is not None:
        for q in range(n):
            p = spam.prep[q]
            if p > 0.0:
                labels = rng.choice(4, size=shots, p=[1.0 - p, p, 0.0, 0.0])
                draws.append(("post", -1, (q,), labels))
    if noise is not None:
        for li, layer in enumerate(circuit.layers):
            pos = li + layer_offset
            if isinstance(layer, OneQubitLayer):
                for q, gate in enumerate(layer.gates):
                    if isinstance(gate, EulerGate1Q):
                        eps = noise.xpi2_noise(pos, q).probs
                        if eps[0] >= 1.0:
                            continue
                        for pulse in (0, 1):
                            labels = rng.choice(4, size=shots, p=eps)
                            draws.append(("pulse", li, q, pulse, labels))
                    else:
                        probs = noise.compiled_1q_channel(pos, q, gate)
                        if probs[0] >= 1.0:
                            continue
                        labels = rng.choice(4, size=shots, p=probs)
                        draws.append(("post", li, (q,), labels))
            else:
                chan = layer_channel(circuit, li, noise, layer_offset)
                for qubits, probs in chan.terms:
                    if probs[0] >= 1.0:
                        continue
                    labels = rng.choice(len(probs), size=shots, p=probs)
                    draws.append(("post", li, qubits, labels))

    patterns: dict[tuple, list[int]] = {(): []}
    if draws:
        all_labels = np.stack([d[-1] for d in draws], axis=1)
        nz_rows = np.nonzero(all_labels.any(axis=1))[0]
        patterns[()] = [int(s) for s in np.setdiff1d(np.arange(shots), nz_rows)]
        for shot in nz_rows:
            key = tuple(
                (i, int(lab)) for i, lab in enumerate(all_labels[shot]) if lab
            )
            patterns.setdefault(key, []).append(int(shot))
    else:
        patterns[()] = list(range(shots))

    results = np.zeros(shots, dtype=np.int64)
    for key, shot_ids in sorted(patterns.items()):
        if not shot_ids:
            continue
        post: dict[int, list[PauliString]] = {}
        pulse_faults: dict[tuple[int, int], dict[int, int]] = {}
        for di, lab in key:
            entry = draws[di]
            if entry[0] == "post":
                _, li, qubits, _ = entry
                post.setdefault(li, []).append(_local_fault(n, qubits, lab))
            else:
                _, li, q, pulse, _ = entry
                pulse_faults.setdefault((li, q), {})[pulse] = lab
        state = _zero_state(n)
        for fault in post.get(-1, []):
            state = apply_pauli(state, fault)
        for li, layer in enumerate(circuit.layers):
            state = _apply_layer_with_faults(state, layer, n, li, pulse_faults)
            for fault in post.get(li, []):
                state = apply_pauli(state, fault)
        probs = np.abs(state) ** 2
        probs /= probs.sum()
        samples = rng.choice(2**n, size=len(shot_ids), p=probs)
        results[np.array(shot_ids)] = samples

    if spam is not None:
        results = _apply_meas_flips(results, spam, rng)
    return results


def _apply_layer_with_faults(state, layer, n, layer_index, pulse_faults):
    if isinstance(layer, TwoQubitLayer) or not pulse_faults:
        return apply_circuit_layer(state, layer, n)
    for q, gate in enumerate(layer.gates):
        faults = pulse_faults.get((layer_index, q))
        if faults is None:
            state = apply_1q(state, gate_unitary(gate), q, n)
            continue
        phi1, phi2, phi3 = gate.angles
        state = apply_1q(state, _rz(phi3), q, n)
        state = apply_1q(state, _RX90, q, n)
        if 0 in faults:
            state = apply_pauli(state, _local_fault(n, (q,), faults[0]))
        state = apply_1q(state, _rz(phi2), q, n)
        state = apply_1q(state, _RX90, q, n)
        if 1 in faults:
            state = apply_pauli(state, _local_fault(n, (q,), faults[1]))
        state = apply_1q(state, _rz(phi1), q, n)
    return state


def _local_fault(n: int, qubits: tuple[int, ...], label: int) -> PauliString:
    p = PauliString.identity(n)
    for q in reversed(qubits):
        code = label & 3
        label >>= 2
        if code:
            p = p * PauliString.single(n, q, "IXYZ"[code])
    return p.with_sign(1)


def _apply_meas_flips(
    results: np.ndarray, spam: SpamModel, rng: np.random.Generator
) -> np.ndarray:
    n = spam.n
    out = results.copy()
    for q in range(n):
        bitpos = n - 1 - q
        bits = (out >> bitpos) & 1
        p0 = spam.meas0[q]
        p1 = spam.meas1[q]
        flips = np.where(bits == 0, rng.random(len(out)) < p0, rng.random(len(out)) < p1)
        out = out ^ (flips.astype(np.int64) << bitpos)
    return out
