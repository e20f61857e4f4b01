"""Pauli-stochastic error models attached to circuit layers.

Every layer of a circuit is followed by one error channel:

* an entangling layer contributes, per two-qubit gate, a 15-rate Pauli
  channel on the gate's pair;
* a one-qubit layer contributes, per qubit, the two 3-rate channels of the
  X90 pulses inside the gate's five-pulse form, pushed through the
  remaining pulse factors of the gate.  For Clifford gates that push is an
  exact Pauli relabelling, so this module's compiled per-gate channel is
  exact wherever it is consumed (folding and fidelity estimation only ever
  see Clifford circuits).  For Euler gates the same compiled Pauli channel
  is a Pauli-stochastic stand-in (the exact pushed channel is a unitary
  mixture); the dense transfer-matrix and statevector paths in
  :mod:`cliffproxy.dense` handle those gates exactly at their pulse
  positions instead.

Idle qubits in entangling layers carry no gate and hence no error.

For Clifford-only circuits the per-layer channels fold exactly into a
single end-of-circuit Pauli channel.  The fold runs in the Walsh
(transfer-matrix-diagonal) domain where conjugation is a label permutation
and channel composition is a pointwise product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import clifford as cl
from .circuits import (
    CliffordGate1Q,
    LayeredCircuit,
    OneQubitLayer,
    TwoQubitLayer,
)
from .pauli import PauliChannel, PauliString, pauli_walsh

__all__ = [
    "GateNoise",
    "NoiseModel",
    "NoiseBudget",
    "SpamModel",
    "LayerErrorChannel",
    "FoldSizeError",
    "sample_error_model",
    "layer_channel",
    "circuit_channels",
    "fold_to_end",
    "fold_eigenvalues",
    "sample_fault",
    "process_infidelity_exact",
    "layer_infidelities",
    "noise_to_dict",
    "noise_from_dict",
    "FOLD_LIMIT",
]

FOLD_LIMIT = 10

# letter-product table on label codes (Klein group: X*Y=Z etc.)
_CODE_XOR = np.zeros((4, 4), dtype=np.int64)
for _a in range(4):
    for _b in range(4):
        _xa, _za = ((0, 0), (1, 0), (1, 1), (0, 1))[_a]
        _xb, _zb = ((0, 0), (1, 0), (1, 1), (0, 1))[_b]
        _CODE_XOR[_a, _b] = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[
            (_xa ^ _xb, _za ^ _zb)
        ]


class FoldSizeError(ValueError):
    """Exact folding was requested above the dense limit; use Monte Carlo."""


@dataclass(frozen=True, eq=False)
class GateNoise:
    """Local Pauli error rates of one gate (identity probability first)."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) not in (4, 16):
            raise ValueError("expected 4 or 16 local probabilities")
        if p.min() < -1e-15 or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("invalid local probability vector")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_rates(cls, rates) -> "GateNoise":
        r = np.asarray(rates, dtype=float)
        if len(r) not in (3, 15):
            raise ValueError("expected 3 or 15 non-identity rates")
        return cls(np.concatenate(([1.0 - r.sum()], r)))

    @classmethod
    def identity(cls, k: int) -> "GateNoise":
        p = np.zeros(4**k)
        p[0] = 1.0
        return cls(p)

    @property
    def total(self) -> float:
        return float(1.0 - self.probs[0])

    @property
    def num_qubits(self) -> int:
        return 1 if len(self.probs) == 4 else 2


def _convolve_local(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Distribution of the product of two independent local faults."""
    k = len(p1)
    out = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if k == 4:
                prod = _CODE_XOR[i, j]
            else:
                prod = (_CODE_XOR[i >> 2, j >> 2] << 2) | _CODE_XOR[i & 3, j & 3]
            out[prod] += p1[i] * p2[j]
    return out


def _permute_local(p: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    out[perm] = p
    return out


class NoiseModel:
    """Per-gate Pauli error rates for a circuit family.

    Two-qubit entries are keyed by (gate name, sorted pair) and one-qubit
    X90 entries by qubit.  In the Markovian mode the same gate reuses its
    rates at every layer position; otherwise keys carry the layer position
    and every application gets independently sampled rates.
    """

    def __init__(self, markovian: bool, one_qubit: dict, two_qubit: dict):
        self.markovian = markovian
        self.one_qubit = dict(one_qubit)
        self.two_qubit = dict(two_qubit)
        self._compiled: dict = {}

    @staticmethod
    def pair_key(name: str, pair) -> tuple:
        a, b = pair
        if name == "CZ":
            a, b = sorted((a, b))
        return (name, a, b)

    def xpi2_noise(self, position: int, qubit: int) -> GateNoise:
        key = qubit if self.markovian else (position, qubit)
        try:
            return self.one_qubit[key]
        except KeyError:
            raise KeyError(
                f"no one-qubit noise entry for qubit {qubit} at layer {position}"
            ) from None

    def twoq_noise(self, position: int, name: str, pair) -> GateNoise:
        key = self.pair_key(name, pair)
        if not self.markovian:
            key = (position,) + key
        try:
            return self.two_qubit[key]
        except KeyError:
            raise KeyError(
                f"no two-qubit noise entry for {name} on {tuple(pair)} at layer {position}"
            ) from None

    def compiled_1q_channel(self, position: int, qubit: int, gate) -> np.ndarray:
        """Pauli channel after a one-qubit gate: both X90 faults pushed to
        the end of the gate.  Exact for Clifford gates; for Euler gates this
        drops the non-Pauli part of the pushed faults (the exact treatment
        lives in the dense simulation paths)."""
        if isinstance(gate, CliffordGate1Q):
            cache_key = (position if not self.markovian else -1, qubit, gate.index)
        else:
            cache_key = (position if not self.markovian else -1, qubit, "euler")
        hit = self._compiled.get(cache_key)
        if hit is not None:
            return hit
        eps = self.xpi2_noise(position, qubit).probs
        if isinstance(gate, CliffordGate1Q):
            phi1, phi2, _ = cl.one_qubit_cliffords()[gate.index].euler
            tail1 = _zrot_index(phi1)
            mid = cl.clifford_mult(
                cl.clifford_mult(tail1, cl.one_qubit_gate_index("SX")),
                _zrot_index(phi2),
            )
            p_first = _permute_conj(eps, mid)
            p_second = _permute_conj(eps, tail1)
            out = _convolve_local(p_first, p_second)
        else:
            out = _convolve_local(eps, eps)
        self._compiled[cache_key] = out
        return out


def _zrot_index(phi: float) -> int:
    """Group index of the Z rotation by a multiple of pi/2."""
    quarter = round(phi / (np.pi / 2)) % 4
    if abs(phi - round(phi / (np.pi / 2)) * (np.pi / 2)) > 1e-9:
        raise ValueError(f"angle {phi} is not a multiple of pi/2")
    s = cl.one_qubit_gate_index("S")
    idx = 0
    for _ in range(quarter):
        idx = cl.clifford_mult(idx, s)
    return idx


def _permute_conj(probs: np.ndarray, elem_index: int) -> np.ndarray:
    """Push a local fault distribution through a Clifford: A P A'."""
    elem = cl.one_qubit_cliffords()[elem_index]
    out = np.zeros_like(probs)
    for code in range(4):
        new_code, _ = elem.conj_code(code)
        out[new_code] += probs[code]
    return out


@dataclass(frozen=True)
class NoiseBudget:
    """Sampling budgets for random error models."""

    two_qubit: float = 1e-3
    one_qubit: float = 1e-4
    markovian: bool = True


def sample_error_model(
    circuit: LayeredCircuit,
    rng: np.random.Generator,
    two_q_budget: float = 1e-3,
    one_q_budget: float = 1e-4,
    markovian: bool = True,
) -> NoiseModel:
    """Random error model in the style used for the simulation studies.

    Each gate's total error rate is uniform on [0, budget] and is split
    across the 15 (or 3) non-identity labels by a flat draw on the simplex.
    Every qubit gets an X90 entry and every entangling pair a gate entry.
    """
    for budget in (two_q_budget, one_q_budget):
        if not 0.0 <= budget < 1.0:
            raise ValueError(f"budget {budget} outside [0, 1)")

    def sample_gate(k: int, budget: float) -> GateNoise:
        total = float(rng.uniform(0.0, budget)) if budget > 0 else 0.0
        if total == 0.0:
            return GateNoise.identity(k)
        split = rng.dirichlet(np.ones(4**k - 1))
        return GateNoise.from_rates(total * split)

    one_qubit: dict = {}
    two_qubit: dict = {}
    for pos, layer in enumerate(circuit.layers):
        if isinstance(layer, OneQubitLayer):
            for q in range(circuit.n):
                key = q if markovian else (pos, q)
                if key not in one_qubit:
                    one_qubit[key] = sample_gate(1, one_q_budget)
        else:
            for pair in layer.pairs:
                key = NoiseModel.pair_key(layer.gate, pair)
                if not markovian:
                    key = (pos,) + key
                if key not in two_qubit:
                    two_qubit[key] = sample_gate(2, two_q_budget)
    return NoiseModel(markovian, one_qubit, two_qubit)


@dataclass(frozen=True, eq=False)
class LayerErrorChannel:
    """Product of independent local Pauli channels, one per gate in a layer."""

    n: int
    terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    @property
    def p_identity(self) -> float:
        out = 1.0
        for _, probs in self.terms:
            out *= probs[0]
        return float(out)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.p_identity

    def local_eigenvalues(self) -> tuple[tuple[tuple[int, ...], np.ndarray], ...]:
        out = []
        for qubits, probs in self.terms:
            k = len(qubits)
            out.append((qubits, pauli_walsh(probs, k)))
        return tuple(out)

    def eigenvalue_at(self, p: PauliString) -> float:
        """Transfer-matrix diagonal entry at one Pauli label."""
        out = 1.0
        for qubits, eig in self._eigs():
            idx = 0
            for q in qubits:
                idx = 4 * idx + p.code(q)
            out *= eig[idx]
        return float(out)

    def _eigs(self):
        cached = getattr(self, "_eig_cache", None)
        if cached is None:
            cached = self.local_eigenvalues()
            object.__setattr__(self, "_eig_cache", cached)
        return cached

    def dense_probs(self) -> np.ndarray:
        """Global distribution over 4^n labels (small n only)."""
        if self.n > FOLD_LIMIT:
            raise FoldSizeError(f"dense channel above n={FOLD_LIMIT}")
        eig = self.dense_eigenvalues()
        return pauli_walsh(eig, self.n) / 4**self.n

    def dense_eigenvalues(self) -> np.ndarray:
        out = np.ones(4**self.n)
        for qubits, eig in self._eigs():
            out *= eig[_extract_codes(self.n, qubits)]
        return out

    def sample(self, rng: np.random.Generator) -> PauliString:
        """One fault drawn from the product distribution."""
        fault = PauliString.identity(self.n)
        for qubits, probs in self.terms:
            label = int(rng.choice(len(probs), p=probs))
            if label == 0:
                continue
            for q in reversed(qubits):
                code = label & 3
                label >>= 2
                if code:
                    fault = fault * PauliString.single(self.n, q, "IXYZ"[code])
        return fault.with_sign(1)


_EXTRACT_CACHE: dict = {}


def _extract_codes(n: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Index array mapping a global label to its restriction on ``qubits``."""
    key = (n, qubits)
    hit = _EXTRACT_CACHE.get(key)
    if hit is None:
        labels = np.arange(4**n, dtype=np.int64)
        idx = np.zeros(4**n, dtype=np.int64)
        for q in qubits:
            idx = 4 * idx + ((labels >> (2 * (n - 1 - q))) & 3)
        hit = idx
        if 4**n <= 4**FOLD_LIMIT:
            _EXTRACT_CACHE[key] = hit
    return hit


def layer_channel(
    circuit: LayeredCircuit,
    layer_index: int,
    noise: NoiseModel,
    layer_offset: int = 0,
) -> LayerErrorChannel:
    """Error channel inserted after one layer of the circuit."""
    layer = circuit.layers[layer_index]
    pos = layer_index + layer_offset
    terms = []
    if isinstance(layer, TwoQubitLayer):
        for pair in layer.pairs:
            probs = noise.twoq_noise(pos, layer.gate, pair).probs
            terms.append((tuple(pair), probs))
    else:
        for q, gate in enumerate(layer.gates):
            probs = noise.compiled_1q_channel(pos, q, gate)
            terms.append(((q,), probs))
    return LayerErrorChannel(circuit.n, tuple(terms))


def circuit_channels(
    circuit: LayeredCircuit, noise: NoiseModel | None, layer_offset: int = 0
) -> list[LayerErrorChannel | None]:
    """Per-layer error channels (None entries when no noise is given)."""
    if noise is None:
        return [None] * len(circuit.layers)
    return [
        layer_channel(circuit, i, noise, layer_offset)
        for i in range(len(circuit.layers))
    ]


def _layer_conj_dagger_perm(circuit: LayeredCircuit, layer_index: int) -> np.ndarray:
    """Label permutation Q -> label(C' Q C) for one Clifford layer."""
    n = circuit.n
    layer = circuit.layers[layer_index]
    labels = np.arange(4**n, dtype=np.int64)
    if isinstance(layer, OneQubitLayer):
        if not layer.is_clifford:
            raise cl.NotCliffordError("cannot fold through non-Clifford gates")
        out = np.zeros(4**n, dtype=np.int64)
        for q, gate in enumerate(layer.gates):
            inv = cl.clifford_inverse_index(gate.index)
            elem = cl.one_qubit_cliffords()[inv]
            local = np.array([elem.conj_code(c)[0] for c in range(4)], dtype=np.int64)
            codes = (labels >> (2 * (n - 1 - q))) & 3
            out += local[codes] << (2 * (n - 1 - q))
        return out
    out = labels.copy()
    local = _twoq_conj_labels(layer.gate)
    for pair in layer.pairs:
        a, b = pair
        sa = 2 * (n - 1 - a)
        sb = 2 * (n - 1 - b)
        ca = (labels >> sa) & 3
        cb = (labels >> sb) & 3
        mapped = local[4 * ca + cb]
        out = (
            (out & ~((3 << sa) | (3 << sb)))
            | ((mapped >> 2) << sa)
            | ((mapped & 3) << sb)
        )
    return out


_TWOQ_CONJ_CACHE: dict[str, np.ndarray] = {}


def _twoq_conj_labels(gate: str) -> np.ndarray:
    """Label map of the entangling gate's conjugation; CZ and CNOT are
    involutions so the map equals its own inverse."""
    hit = _TWOQ_CONJ_CACHE.get(gate)
    if hit is None:
        tab = cl.from_gate(gate, (0, 1), 2)
        hit = np.zeros(16, dtype=np.int64)
        for code in range(16):
            hit[code] = cl.conjugate(tab, PauliString.from_label(2, code)).label
        _TWOQ_CONJ_CACHE[gate] = hit
    return hit


def fold_eigenvalues(
    circuit: LayeredCircuit,
    noise: NoiseModel,
    limit: int = FOLD_LIMIT,
    layer_offset: int = 0,
) -> np.ndarray:
    """Transfer-matrix diagonal of the folded end-of-circuit error channel."""
    if circuit.n > limit:
        raise FoldSizeError(
            f"exact folding capped at n={limit}; sample faults by Monte Carlo instead"
        )
    if not circuit.is_clifford:
        raise cl.NotCliffordError("exact folding requires a Clifford-only circuit")
    size = 4**circuit.n
    eig = np.ones(size)
    mapping = np.arange(size, dtype=np.int64)
    for i in range(len(circuit.layers) - 1, -1, -1):
        chan = layer_channel(circuit, i, noise, layer_offset)
        eig *= chan.dense_eigenvalues()[mapping]
        mapping = _layer_conj_dagger_perm(circuit, i)[mapping]
    return eig


def fold_to_end(
    circuit: LayeredCircuit,
    noise: NoiseModel,
    limit: int = FOLD_LIMIT,
    layer_offset: int = 0,
) -> PauliChannel:
    """Exact end-of-circuit Pauli channel of a noisy Clifford circuit.

    Each layer's error is conjugated through all downstream Clifford layers
    and the distributions are convolved, all in the Walsh domain.
    """
    eig = fold_eigenvalues(circuit, noise, limit, layer_offset)
    probs = pauli_walsh(eig, circuit.n) / 4**circuit.n
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    return PauliChannel(circuit.n, probs)


def process_infidelity_exact(
    circuit: LayeredCircuit,
    noise: NoiseModel,
    limit: int = FOLD_LIMIT,
    layer_offset: int = 0,
) -> float:
    """1 - p_I of the folded channel (= process infidelity of the circuit)."""
    eig = fold_eigenvalues(circuit, noise, limit, layer_offset)
    return float(1.0 - eig.mean())


def layer_infidelities(
    circuit: LayeredCircuit, noise: NoiseModel, layer_offset: int = 0
) -> list[float]:
    """Per-layer process infidelities 1 - p_I; their sum is the first-order
    estimate of (and an upper bound on the worst-case error of) the circuit."""
    out = []
    for i in range(len(circuit.layers)):
        out.append(layer_channel(circuit, i, noise, layer_offset).infidelity)
    return out


def sample_fault(
    circuit: LayeredCircuit,
    noise: NoiseModel,
    rng: np.random.Generator,
    layer_offset: int = 0,
) -> list[PauliString]:
    """One fault per layer, drawn from each layer's error channel."""
    out = []
    for i in range(len(circuit.layers)):
        out.append(layer_channel(circuit, i, noise, layer_offset).sample(rng))
    return out


@dataclass(frozen=True)
class SpamModel:
    """Classical bit-flip SPAM: prep flips before the circuit, measurement
    flips on readout (asymmetric 0->1 / 1->0 allowed)."""

    prep: tuple[float, ...]
    meas0: tuple[float, ...]
    meas1: tuple[float, ...]

    def __post_init__(self):
        for name, vals in (("prep", self.prep), ("meas0", self.meas0), ("meas1", self.meas1)):
            for v in vals:
                if not 0.0 <= v < 0.5:
                    raise ValueError(f"{name} probability {v} outside [0, 0.5)")
        if not len(self.prep) == len(self.meas0) == len(self.meas1):
            raise ValueError("per-qubit arrays must have equal length")

    @classmethod
    def uniform(cls, n: int, prep: float, meas: float) -> "SpamModel":
        return cls((prep,) * n, (meas,) * n, (meas,) * n)

    @property
    def n(self) -> int:
        return len(self.prep)

    def prep_factor(self, qubit: int) -> float:
        return 1.0 - 2.0 * self.prep[qubit]

    def meas_factor(self, qubit: int) -> float:
        # Parity estimates are measurement-twirled, which symmetrises the
        # asymmetric flip rates exactly.
        return 1.0 - self.meas0[qubit] - self.meas1[qubit]


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


def _label_text(k: int, label: int) -> str:
    return str(PauliString.from_label(k, label))


def noise_to_dict(noise: NoiseModel) -> dict:
    """JSON-ready dict with decimal-string rates for bit-exact replay."""

    def gate_entry(g: GateNoise) -> dict:
        k = g.num_qubits
        return {
            _label_text(k, lab): repr(float(g.probs[lab]))
            for lab in range(1, len(g.probs))
            if g.probs[lab] != 0.0
        }

    def key_str(key) -> str:
        if isinstance(key, tuple):
            return " ".join(str(k) for k in key)
        return str(key)

    return {
        "markovian": noise.markovian,
        "one_qubit": {key_str(k): gate_entry(v) for k, v in noise.one_qubit.items()},
        "two_qubit": {key_str(k): gate_entry(v) for k, v in noise.two_qubit.items()},
    }


def noise_from_dict(data: dict) -> NoiseModel:
    markovian = bool(data["markovian"])

    def parse_gate(entry: dict, k: int) -> GateNoise:
        probs = np.zeros(4**k)
        for text, rate in entry.items():
            probs[PauliString.from_text(text).label] = float(rate)
        probs[0] = 1.0 - probs[1:].sum()
        return GateNoise(probs)

    def parse_key(s: str, one_qubit: bool):
        parts = s.split()
        vals = [int(p) if p.lstrip("-").isdigit() else p for p in parts]
        if len(vals) == 1:
            return vals[0]
        return tuple(vals)

    one_qubit = {
        parse_key(k, True): parse_gate(v, 1) for k, v in data["one_qubit"].items()
    }
    two_qubit = {
        parse_key(k, False): parse_gate(v, 2) for k, v in data["two_qubit"].items()
    }
    return NoiseModel(markovian, one_qubit, two_qubit)
