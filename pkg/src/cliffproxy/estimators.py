"""Benchmarking protocols: direct fidelity estimation and its SPAM-robust
variants, layer-fidelity decay fits, linear cross-entropy, and volumetric
sweeps.

Direct fidelity estimation samples uniform non-identity Paulis, propagates
each backwards through the Clifford circuit, prepares a separable +1
eigenstate of the propagated observable, and measures the original Pauli
at the output.  The mean signed parity estimates the mean of the
transfer-matrix diagonal; the identity diagonal contributes its exact
value 1, so the estimator is

    F = (1 + (4^n - 1) * mean_parity) / 4^n.

Shots are simulated exactly: a fault pattern flips the measured parity iff
it anticommutes with the back-propagated observable at its insertion
point, so each (Pauli, twirl) reduces to a Bernoulli parameter assembled
from per-gate channel eigenvalues and SPAM attenuation factors, and the
shot loop collapses to one binomial draw.  Parity estimates are
measurement-twirled, which also makes asymmetric readout flips act at
their symmetrised rate.  Pauli-frame twirls of a fixed Cliffordization
leave that Bernoulli parameter invariant (frames never change Pauli
letters), so twirls of a fixed circuit pool into a single draw; combined
randomization, which resamples the whole Cliffordization per twirl, is
simulated twirl by twirl.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import clifford as cl
from .circuits import (
    BrickworkSpec,
    CliffordGate1Q,
    LayeredCircuit,
    OneQubitLayer,
    TwoQubitLayer,
    brickwork_pairs,
    cliffordize,
    concatenate,
    identity_layer,
    layer_tableau,
    sample_brickwork,
    scrambling_circuit,
)
from .noise import (
    FOLD_LIMIT,
    NoiseBudget,
    NoiseModel,
    SpamModel,
    circuit_channels,
    process_infidelity_exact,
    sample_error_model,
)
from .pauli import PauliString, sample_uniform_nonidentity

__all__ = [
    "DfeConfig",
    "FidelityEstimate",
    "VolumetricCell",
    "LayerFidelityResult",
    "ReferenceTooNoisyError",
    "SingularCalibrationError",
    "dfe",
    "dfe_with_reference",
    "readout_mitigated_dfe",
    "layer_fidelity_estimate",
    "xeb",
    "volumetric_run",
    "coefficient_of_variation",
    "pauli_expectation",
    "polarization_to_fidelity",
    "fidelity_to_polarization",
]


class ReferenceTooNoisyError(ValueError):
    """The SPAM-reference estimate fell below the divisor floor."""


class SingularCalibrationError(ValueError):
    """A confusion matrix came out (near-)singular, e0 + e1 >= 1."""


@dataclass(frozen=True)
class DfeConfig:
    """Sampling budget: observables x twirls x shots per twirl."""

    num_paulis: int = 30
    num_twirls: int = 32
    shots_per_twirl: int = 100

    def __post_init__(self):
        for name in ("num_paulis", "num_twirls", "shots_per_twirl"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    @property
    def shots_per_pauli(self) -> int:
        return self.num_twirls * self.shots_per_twirl


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    stderr: float
    num_samples: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError("estimate is not finite")
        if self.stderr < 0:
            raise ValueError("standard error must be non-negative")


def polarization_to_fidelity(p: float, n: int) -> float:
    return p + (1.0 - p) / 4**n


def fidelity_to_polarization(f: float, n: int) -> float:
    dim4 = 4**n
    return (dim4 * f - 1.0) / (dim4 - 1.0)


# ---------------------------------------------------------------------------
# DFE core
# ---------------------------------------------------------------------------


def _dagger_tableaux(circuit: LayeredCircuit) -> list[cl.CliffordTableau]:
    return [cl.inverse(layer_tableau(layer, circuit.n)) for layer in circuit.layers]


def pauli_expectation(
    circuit: LayeredCircuit,
    noise: NoiseModel | None,
    spam: SpamModel | None,
    pauli: PauliString,
    layer_offset: int = 0,
) -> tuple[float, PauliString]:
    """Noise-averaged measured parity for one sampled observable.

    Returns the expectation of the signed parity together with the
    back-propagated input observable.
    """
    if not circuit.is_clifford:
        raise cl.NotCliffordError("fidelity estimation requires a Clifford circuit")
    channels = circuit_channels(circuit, noise, layer_offset)
    daggers = _dagger_tableaux(circuit)
    return _walk(circuit, channels, daggers, spam, pauli)


def _walk(circuit, channels, daggers, spam, pauli):
    lam = 1.0
    q = pauli
    for i in range(len(circuit.layers) - 1, -1, -1):
        if channels[i] is not None:
            lam *= channels[i].eigenvalue_at(q)
        q = cl.conjugate(daggers[i], q)
    if spam is not None:
        for qi in q.support:
            lam *= spam.prep_factor(qi)
        for qi in pauli.support:
            lam *= spam.meas_factor(qi)
    return lam, q


def _draw_parity(expected: float, shots: int, rng: np.random.Generator) -> float:
    flip_prob = min(max((1.0 - expected) / 2.0, 0.0), 1.0)
    flips = int(rng.binomial(shots, flip_prob))
    return 1.0 - 2.0 * flips / shots


@dataclass
class _PauliSample:
    pauli: PauliString
    back_propagated: PauliString
    value: float


def _sample_paulis(
    circuit: LayeredCircuit | None,
    noise: NoiseModel | None,
    spam: SpamModel | None,
    config: DfeConfig,
    rng: np.random.Generator,
    target: LayeredCircuit | None,
    append: LayeredCircuit | None,
    layer_offset: int,
) -> list[_PauliSample]:
    """Per-observable parity estimates for all sampled Paulis."""
    if target is None:
        if circuit is None:
            raise ValueError("either a circuit or a target is required")
        if not circuit.is_clifford:
            raise cl.NotCliffordError(
                "fidelity estimation requires a Clifford circuit; Cliffordize first"
            )
        n = circuit.n
        channels = circuit_channels(circuit, noise, layer_offset)
        daggers = _dagger_tableaux(circuit)
        out = []
        for _ in range(config.num_paulis):
            p = sample_uniform_nonidentity(n, rng)
            expected, pprime = _walk(circuit, channels, daggers, spam, p)
            value = _draw_parity(expected, config.shots_per_pauli, rng)
            out.append(_PauliSample(p, pprime, value))
        return out

    # combined randomization: a fresh Cliffordization per twirl
    n = target.n
    out = []
    for _ in range(config.num_paulis):
        p = sample_uniform_nonidentity(n, rng)
        values = []
        pprime = None
        for _ in range(config.num_twirls):
            circ = cliffordize(target, rng)
            if append is not None:
                circ = concatenate(circ, append)
            expected, pprime = pauli_expectation(circ, noise, spam, p, layer_offset)
            values.append(_draw_parity(expected, config.shots_per_twirl, rng))
        out.append(_PauliSample(p, pprime, float(np.mean(values))))
    return out


def _aggregate(
    samples: list[_PauliSample], n: int, config: DfeConfig, metadata: dict
) -> FidelityEstimate:
    dim4 = 4**n
    values = np.array([s.value for s in samples])
    mean_parity = float(values.mean())
    f_hat = (1.0 + (dim4 - 1) * mean_parity) / dim4
    if len(values) >= 2:
        se_parity = float(values.std(ddof=1)) / math.sqrt(len(values))
    else:
        # single observable: fall back to the binomial shot error
        se_parity = math.sqrt(
            max(1.0 - values[0] ** 2, 0.0) / config.shots_per_pauli
        )
    stderr = (dim4 - 1) / dim4 * se_parity
    meta = dict(metadata)
    meta["paulis"] = tuple(str(s.pauli) for s in samples)
    meta["parities"] = tuple(float(s.value) for s in samples)
    return FidelityEstimate(
        f_hat, stderr, len(values) * config.shots_per_pauli, meta
    )


def dfe(
    circuit: LayeredCircuit | None,
    noise: NoiseModel | None,
    spam: SpamModel | None,
    config: DfeConfig,
    rng: np.random.Generator,
    target: LayeredCircuit | None = None,
    append: LayeredCircuit | None = None,
    layer_offset: int = 0,
) -> FidelityEstimate:
    """Direct fidelity estimate of a Clifford circuit under noise and SPAM.

    With ``target`` given, each twirl draws a fresh Cliffordization of the
    target (combined randomization); otherwise ``circuit`` is fixed and the
    Pauli-frame twirls pool into one binomial draw per observable.
    ``append`` concatenates a fixed Clifford tail (e.g. a scrambler) after
    each randomized instance.
    """
    samples = _sample_paulis(
        circuit, noise, spam, config, rng, target, append, layer_offset
    )
    n = (circuit or target).n
    return _aggregate(samples, n, config, {"protocol": "dfe"})


def dfe_with_reference(
    circuit: LayeredCircuit | None,
    scrambler: LayeredCircuit,
    noise: NoiseModel | None,
    spam: SpamModel | None,
    config: DfeConfig,
    rng: np.random.Generator,
    target: LayeredCircuit | None = None,
    reference_floor: float = 0.01,
) -> FidelityEstimate:
    """SPAM-robust estimate from a scrambled reference experiment.

    Estimates the circuit composed with the scrambler, estimates the
    scrambler alone, and returns the ratio: the SPAM and scrambler error
    contributions cancel to first order.  The reference run addresses the
    scrambler's noise entries at the layer positions it occupies inside
    the composed circuit, so both runs see identical scrambler errors even
    in the non-Markovian mode.
    """
    if not scrambler.is_clifford:
        raise cl.NotCliffordError("the scrambling circuit must be Clifford")
    body = circuit if circuit is not None else target
    offset = len(body.layers) - 1
    if target is not None:
        num = _sample_paulis(None, noise, spam, config, rng, target, scrambler, 0)
    else:
        composed = concatenate(circuit, scrambler)
        num = _sample_paulis(composed, noise, spam, config, rng, None, None, 0)
    den = _sample_paulis(scrambler, noise, spam, config, rng, None, None, offset)
    n = body.n
    est_num = _aggregate(num, n, config, {"protocol": "dfe_reference_numerator"})
    est_den = _aggregate(den, n, config, {"protocol": "dfe_reference_denominator"})
    if est_den.mean <= reference_floor:
        raise ReferenceTooNoisyError(
            f"reference fidelity {est_den.mean:.4f} at or below floor {reference_floor}"
        )
    ratio = est_num.mean / est_den.mean
    # first-order delta method for the ratio's standard error
    rel = math.sqrt(
        (est_num.stderr / max(abs(est_num.mean), 1e-12)) ** 2
        + (est_den.stderr / est_den.mean) ** 2
    )
    meta = {
        "protocol": "dfe_reference",
        "numerator": est_num.mean,
        "denominator": est_den.mean,
    }
    return FidelityEstimate(
        ratio, abs(ratio) * rel, est_num.num_samples + est_den.num_samples, meta
    )


def readout_mitigated_dfe(
    circuit: LayeredCircuit | None,
    noise: NoiseModel | None,
    spam: SpamModel | None,
    config: DfeConfig,
    calib_shots: int,
    rng: np.random.Generator,
    target: LayeredCircuit | None = None,
) -> FidelityEstimate:
    """DFE with tensored confusion-matrix readout mitigation.

    Per-qubit confusion matrices come from all-zeros / all-ones calibration
    circuits.  Preparation flips are indistinguishable from measurement
    flips in that calibration and end up inside the mitigation divisor;
    the residual bias this causes is part of the per-observable spread.
    """
    if calib_shots < 100:
        raise ValueError("calibration needs at least 100 shots")
    body = circuit if circuit is not None else target
    n = body.n
    divisors = np.ones(n)
    if spam is not None:
        for q in range(n):
            p = spam.prep[q]
            e0_true = p * (1.0 - spam.meas1[q]) + (1.0 - p) * spam.meas0[q]
            e1_true = p * (1.0 - spam.meas0[q]) + (1.0 - p) * spam.meas1[q]
            e0_hat = rng.binomial(calib_shots, e0_true) / calib_shots
            e1_hat = rng.binomial(calib_shots, e1_true) / calib_shots
            divisors[q] = 1.0 - e0_hat - e1_hat
            if divisors[q] <= 1e-6:
                raise SingularCalibrationError(
                    f"qubit {q} confusion matrix singular: e0+e1 = {e0_hat + e1_hat:.3f}"
                )
    samples = _sample_paulis(circuit, noise, spam, config, rng, target, None, 0)
    for s in samples:
        corr = 1.0
        for q in s.pauli.support:
            corr *= divisors[q]
        s.value = s.value / corr
    return _aggregate(samples, n, config, {"protocol": "dfe_readout_mitigated"})


# ---------------------------------------------------------------------------
# layer-fidelity decay fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerFidelityResult:
    """Fitted per-layer polarizations and the decay intercepts."""

    n: int
    layers: tuple[TwoQubitLayer, ...]
    polarizations: tuple[float, ...]
    stderrs: tuple[float, ...]
    intercepts: tuple[float, ...]
    dropped_points: int

    def _layer_key(self, layer: TwoQubitLayer) -> tuple:
        return (layer.gate, frozenset(tuple(p) for p in layer.pairs))

    def predict_fidelity(self, circuit: LayeredCircuit) -> FidelityEstimate:
        """Process-fidelity prediction from per-layer polarization powers."""
        keys = {self._layer_key(l): i for i, l in enumerate(self.layers)}
        p_tot = 1.0
        rel_var = 0.0
        for layer in circuit.entangling_layers():
            key = self._layer_key(layer)
            if key not in keys:
                raise ValueError("circuit contains an entangling layer that was not fitted")
            i = keys[key]
            p_tot *= self.polarizations[i]
            rel_var += (self.stderrs[i] / self.polarizations[i]) ** 2
        f = polarization_to_fidelity(p_tot, circuit.n)
        return FidelityEstimate(
            f, abs(p_tot) * math.sqrt(rel_var), 0, {"protocol": "layer_fidelity"}
        )


def _repeated_layer_circuit(
    layer: TwoQubitLayer, n: int, reps: int, rng: np.random.Generator
) -> LayeredCircuit:
    layers: list = [_random_clifford_layer(n, rng)]
    for _ in range(reps):
        layers.append(layer)
        layers.append(_random_clifford_layer(n, rng))
    return LayeredCircuit(n, tuple(layers))


def _random_clifford_layer(n: int, rng: np.random.Generator) -> OneQubitLayer:
    return OneQubitLayer(tuple(CliffordGate1Q(int(k)) for k in rng.integers(24, size=n)))


def layer_fidelity_estimate(
    layers,
    n: int,
    noise: NoiseModel,
    depths,
    config: DfeConfig,
    rng: np.random.Generator,
    spam: SpamModel | None = None,
) -> LayerFidelityResult:
    """Per-layer polarizations from exponential decay fits.

    Each distinct entangling layer is repeated m times (with fresh random
    one-qubit Clifford layers) for every m in ``depths``; the DFE estimates
    are converted to polarizations and fitted to A*p^m by weighted least
    squares on the log scale.  Requires the Markovian noise mode, which is
    what makes the decay a single exponential.
    """
    depths = sorted(int(m) for m in depths)
    if len(depths) < 3:
        raise ValueError("need at least three depths for a decay fit")
    if not noise.markovian:
        raise ValueError("layer-fidelity fits assume the Markovian noise mode")
    layers = tuple(layers)
    polarizations = []
    stderrs = []
    intercepts = []
    dropped = 0
    dim4 = 4**n
    for layer in layers:
        xs, ys, ws = [], [], []
        for m in depths:
            circ = _repeated_layer_circuit(layer, n, m, rng)
            est = dfe(circ, noise, spam, config, rng)
            p_hat = fidelity_to_polarization(est.mean, n)
            sigma_p = est.stderr * dim4 / (dim4 - 1)
            if p_hat <= 0.0:
                dropped += 1
                continue
            xs.append(m)
            ys.append(math.log(p_hat))
            ws.append((p_hat / sigma_p) ** 2 if sigma_p > 0 else 1e12)
        if len(xs) < 3:
            raise ValueError("too few positive decay points to fit")
        x = np.array(xs)
        y = np.array(ys)
        w = np.array(ws)
        sw = w.sum()
        sx = float(w @ x)
        sy = float(w @ y)
        sxx = float(w @ (x * x))
        sxy = float(w @ (x * y))
        det = sw * sxx - sx * sx
        slope = (sw * sxy - sx * sy) / det
        intercept = (sxx * sy - sx * sxy) / det
        var_slope = sw / det
        p = math.exp(slope)
        polarizations.append(p)
        stderrs.append(p * math.sqrt(max(var_slope, 0.0)))
        intercepts.append(math.exp(intercept))
    return LayerFidelityResult(
        n, layers, tuple(polarizations), tuple(stderrs), tuple(intercepts), dropped
    )


# ---------------------------------------------------------------------------
# linear cross-entropy
# ---------------------------------------------------------------------------


def xeb(p_exp, p_ideal) -> float:
    """Normalised linear cross-entropy between measured and ideal outputs.

    ``p_ideal`` is the exact output distribution.  ``p_exp`` is either a
    probability/frequency vector of the same length or an integer array of
    sampled bitstrings, in which case the overlap term is the sample mean
    of p_ideal at the observed strings (unbiased, no histogram needed).
    """
    p_ideal = np.asarray(p_ideal, dtype=float)
    size = len(p_ideal)
    dim = size
    if abs(p_ideal.sum() - 1.0) > 1e-9:
        raise ValueError("ideal distribution must sum to 1")
    denom = dim * float(p_ideal @ p_ideal) - 1.0
    if abs(denom) < 1e-9:
        raise ValueError("ideal distribution is too flat for the normalisation")
    p_exp = np.asarray(p_exp)
    if p_exp.dtype.kind in "iu":
        if p_exp.min() < 0 or p_exp.max() >= size:
            raise ValueError("bitstring sample out of range")
        overlap = float(p_ideal[p_exp].mean())
    else:
        if p_exp.shape != p_ideal.shape:
            raise ValueError("frequency vector length mismatch")
        overlap = float(p_exp @ p_ideal)
    return (dim * overlap - 1.0) / denom


# ---------------------------------------------------------------------------
# volumetric sweep
# ---------------------------------------------------------------------------


@dataclass
class VolumetricCell:
    width: int
    depth: int
    estimates: dict[str, FidelityEstimate] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)


def coefficient_of_variation(samples) -> tuple[float, float, float]:
    """Sample mean, sample standard deviation (n-1), and their ratio."""
    arr = np.asarray(list(samples), dtype=float)
    if len(arr) < 2:
        raise ValueError("need at least two samples")
    mu = float(arr.mean())
    if mu == 0.0:
        raise ValueError("mean is zero; coefficient of variation undefined")
    sigma = float(arr.std(ddof=1))
    return mu, sigma, sigma / mu


def volumetric_run(
    widths,
    depths,
    noise: NoiseBudget,
    spam: tuple[float, float] | None,
    config: DfeConfig,
    rng: np.random.Generator,
    scrambler_depth: int = 4,
    layer_fit_depths=(2, 4, 8, 16),
    fold_limit: int = FOLD_LIMIT,
) -> list[VolumetricCell]:
    """Estimate brickwork fidelities over a width x depth grid.

    Each cell runs unmitigated DFE, the scrambled-reference method,
    readout-mitigated DFE, and a layer-fidelity prediction; widths inside
    the exact-folding limit also record the exact fidelity.  Failed
    estimators are recorded per cell instead of aborting the sweep.
    """
    depths = [int(d) for d in depths]
    cells = []
    for n in widths:
        n = int(n)
        spam_model = SpamModel.uniform(n, *spam) if spam is not None else None
        template = sample_brickwork(
            BrickworkSpec(n, max(max(depths), 2)), "haar", rng
        )
        noise_model = sample_error_model(
            template, rng, noise.two_qubit, noise.one_qubit, noise.markovian
        )
        scrambler = scrambling_circuit(n, scrambler_depth, rng)
        fit_layers = (
            TwoQubitLayer(brickwork_pairs(n, 0)),
            TwoQubitLayer(brickwork_pairs(n, 1)),
        )
        try:
            fit = layer_fidelity_estimate(
                fit_layers, n, noise_model, layer_fit_depths, config, rng, spam=spam_model
            )
        except Exception as exc:  # recorded per cell below
            fit = None
            fit_error = str(exc)
        for d in depths:
            cell = VolumetricCell(n, d)
            target = sample_brickwork(BrickworkSpec(n, d), "haar", rng)
            proxy = cliffordize(target, rng)

            def attempt(name, fn):
                try:
                    cell.estimates[name] = fn()
                except Exception as exc:
                    cell.errors[name] = str(exc)

            attempt(
                "unmitigated",
                lambda: dfe(None, noise_model, spam_model, config, rng, target=target),
            )
            attempt(
                "reference",
                lambda: dfe_with_reference(
                    None, scrambler, noise_model, spam_model, config, rng, target=target
                ),
            )
            attempt(
                "readout",
                lambda: readout_mitigated_dfe(
                    None, noise_model, spam_model, config, 1000, rng, target=target
                ),
            )
            if fit is not None:
                attempt("layer_fidelity", lambda: fit.predict_fidelity(proxy))
            else:
                cell.errors["layer_fidelity"] = fit_error
            if n <= fold_limit:
                attempt(
                    "exact",
                    lambda: FidelityEstimate(
                        1.0 - process_infidelity_exact(proxy, noise_model, fold_limit),
                        0.0,
                        0,
                        {"protocol": "exact_fold"},
                    ),
                )
            cells.append(cell)
    return cells
