from typing import Dict, Optional, Sequence, Union
import logging
import math

import lmfit
import numpy as np

from app.core.errors import ContractViolationError, InsufficientDataError, ModelMismatchError
from app.models.benchmarking import (
    CycleBenchmarkReport,
    DecayDataset,
    DecayFit,
    ErrorBudget,
    ExponentialModel,
    InterleavedResult,
    LeakageFit,
    LeakageModel,
    LeakagePerGate,
)

logger = logging.getLogger(__name__)

FIT_KWS = {'xtol': 1e-13, 'ftol': 1e-13}
MAX_NFEV = 20000


def exponential_decay(m, amplitude, decay):
    return amplitude * decay ** m


def leakage_population(m, amplitude, baseline, rate):
    return baseline - amplitude * np.exp(-rate * m)


def _binomial_sigma(means: np.ndarray, shots: int, samples: np.ndarray) -> np.ndarray:
    floor = 0.5 / shots
    p = np.clip(means, floor, 1.0 - floor)
    return np.sqrt(p * (1.0 - p) / (shots * samples))


def _fit_sigma(data: DecayDataset) -> Optional[np.ndarray]:
    """Per-length standard error: binomial when shots are known, sample scatter otherwise"""
    means = data.mean_values()
    counts = data.sample_counts()
    if data.shots:
        return _binomial_sigma(means, data.shots, counts)
    if np.all(counts > 1):
        spread = np.array([np.std(v, ddof=1) for v in data.values]) / np.sqrt(counts)
        if np.all(spread > 0):
            return spread
    return None


def _stderr(result: lmfit.model.ModelResult, name: str) -> float:
    value = result.params[name].stderr
    return float(value) if value is not None else float('nan')


class BenchmarkingService:
    # Decay fits

    def _fit_exponential(self, lengths: np.ndarray, y: np.ndarray, sigma: Optional[np.ndarray]) -> DecayFit:
        if len(np.unique(lengths)) < 3:
            raise InsufficientDataError(f"Decay fit needs at least 3 distinct lengths, got {len(np.unique(lengths))}")

        # log-linear start, exact for noiseless data
        slope, intercept = np.polyfit(lengths, np.log(np.clip(y, 1e-12, None)), 1)
        model = lmfit.Model(exponential_decay, independent_vars=['m'])
        params = model.make_params(amplitude=math.exp(intercept), decay=math.exp(slope))
        params['amplitude'].set(min=0.0)
        params['decay'].set(min=1e-12)

        weights = None if sigma is None else 1.0 / sigma
        result = model.fit(
            y, params, m=lengths, weights=weights,
            scale_covar=sigma is None, fit_kws=FIT_KWS, max_nfev=MAX_NFEV,
        )
        amplitude = float(result.params['amplitude'].value)
        decay = float(result.params['decay'].value)
        fit = DecayFit(
            amplitude=amplitude,
            decay=decay,
            amplitude_err=_stderr(result, 'amplitude'),
            decay_err=_stderr(result, 'decay'),
            redchi=float(result.redchi) if np.isfinite(result.redchi) else 0.0,
            n_lengths=len(lengths),
        )
        if decay > 1.0:
            w = np.ones_like(y) if sigma is None else 1.0 / sigma ** 2
            mean = float(np.sum(w * y) / np.sum(w))
            logger.warning(f"Non-decaying data (fitted p={decay:.6g}); clamping p to 1, A to {mean:.6g}")
            fit = fit.model_copy(update={'decay': 1.0, 'amplitude': mean, 'clamped': True})
        return fit

    def fit_decay(self, data: DecayDataset) -> DecayFit:
        """Weighted fit of P(m) = A p^m; A stays free"""
        lengths = np.asarray(data.lengths, dtype=float)
        fit = self._fit_exponential(lengths, data.mean_values(), _fit_sigma(data))
        logger.info(f"Decay fit ({data.kind}): p={fit.decay:.6g} +/- {fit.decay_err:.2g}, A={fit.amplitude:.4g}")
        return fit

    def fit_unitarity(self, data: DecayDataset, d: int = 4) -> DecayFit:
        """Unitarity u from purity decay P(m) = A u^m + 1/d"""
        lengths = np.asarray(data.lengths, dtype=float)
        shifted = data.mean_values() - 1.0 / d
        sigma = _fit_sigma(data)
        fit = self._fit_exponential(lengths, shifted, sigma)
        logger.info(f"Unitarity fit: u={fit.decay:.6g} +/- {fit.decay_err:.2g}")
        return fit

    # Fidelity arithmetic

    def interleaved_fidelity(self, p_ref: float, p_int: float, d: int = 4) -> InterleavedResult:
        """Interleaved-RB gate fidelity F = 1 - (d-1)/d (1 - p_int/p_ref)"""
        if p_ref == 0:
            raise ContractViolationError("p_ref must be non-zero")
        warning = None
        if not (0 < p_int <= p_ref <= 1):
            warning = f"Expected 0 < p_int <= p_ref <= 1, got p_int={p_int}, p_ref={p_ref}"
            logger.warning(warning)
        error = (d - 1) / d * (1.0 - p_int / p_ref)
        return InterleavedResult(fidelity=1.0 - error, error=error, warning=warning)

    def cb_analyze(self, pauli_decays: Dict[str, float], d: int = 4) -> CycleBenchmarkReport:
        if not pauli_decays:
            raise InsufficientDataError("Cycle benchmarking needs at least one Pauli decay")
        for label, p in pauli_decays.items():
            if not 0 < p <= 1:
                raise ContractViolationError(f"Decay for {label} must lie in (0, 1], got {p}")
        factor = 1.0 - 1.0 / d ** 2
        rates = {label: (1.0 - p) * factor for label, p in pauli_decays.items()}
        mean = float(np.mean(list(pauli_decays.values())))
        return CycleBenchmarkReport(error_rates=rates, mean_decay=mean, process_infidelity=(1.0 - mean) * factor)

    def error_budget(self, e_f: float, e_s: float) -> ErrorBudget:
        """Split e_f into stochastic e_s and coherent e_u = e_f - e_s (floored at 0)"""
        if e_s > e_f:
            logger.warning(f"Stochastic error {e_s:.4g} exceeds total {e_f:.4g}; coherent part floored at 0")
            return ErrorBudget(e_f=e_f, e_s=e_f, e_u=0.0, flagged=True)
        return ErrorBudget(e_f=e_f, e_s=e_s, e_u=e_f - e_s)

    def xrb_decompose(self, p_rb: float, unitarity: float, d: int = 4) -> ErrorBudget:
        if unitarity > 1 or unitarity <= 0:
            raise ContractViolationError(f"Unitarity must lie in (0, 1], got {unitarity}")
        if not 0 < p_rb <= 1:
            raise ContractViolationError(f"p_rb must lie in (0, 1], got {p_rb}")
        factor = 1.0 - 1.0 / d ** 2
        return self.error_budget((1.0 - p_rb) * factor, (1.0 - math.sqrt(unitarity)) * factor)

    def process_to_average_infidelity(self, e_process: float, d: int = 4) -> float:
        return e_process * d / (d + 1)

    def average_to_process_infidelity(self, e_average: float, d: int = 4) -> float:
        return e_average * (d + 1) / d

    # Leakage

    def lrb_fit(self, data: DecayDataset) -> LeakageFit:
        """Rate-equation fit P2(m) = B - A exp(-Gamma m); gamma_up = B Gamma, gamma_down = Gamma - gamma_up"""
        lengths = np.asarray(data.lengths, dtype=float)
        if len(lengths) < 3:
            raise InsufficientDataError(f"Leakage fit needs at least 3 lengths, got {len(lengths)}")
        y = data.mean_values()
        if np.ptp(y) < 1e-12:
            raise ModelMismatchError("Flat |2> population: leakage rate is not identifiable")
        sigma = _fit_sigma(data) if np.all(data.sample_counts() > 1) else None

        # Variable projection over Gamma for the start point
        span = lengths.max() - lengths.min() if lengths.max() > lengths.min() else 1.0
        best = None
        for rate in np.geomspace(1e-3 / span, 1e2 / span, 400):
            design = np.column_stack([np.ones_like(lengths), -np.exp(-rate * lengths)])
            coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
            ssr = float(np.sum((design @ coeffs - y) ** 2))
            if best is None or ssr < best[0]:
                best = (ssr, rate, coeffs)
        _, rate0, (baseline0, amplitude0) = best

        model = lmfit.Model(leakage_population, independent_vars=['m'])
        params = model.make_params(amplitude=amplitude0, baseline=baseline0, rate=rate0)
        result = model.fit(
            y, params, m=lengths, weights=None if sigma is None else 1.0 / sigma,
            scale_covar=sigma is None, fit_kws=FIT_KWS, max_nfev=MAX_NFEV,
        )
        amplitude = float(result.params['amplitude'].value)
        baseline = float(result.params['baseline'].value)
        rate = float(result.params['rate'].value)
        if baseline < 0 or rate < 0:
            logger.error(f"Leakage fit gave baseline={baseline:.4g}, rate={rate:.4g}")
            raise ModelMismatchError(f"Fitted baseline {baseline:.4g} or rate {rate:.4g} is negative")
        if baseline > 1:
            # gamma_down = rate (1 - baseline) turns negative
            logger.error(f"Leakage fit gave baseline={baseline:.4g} above one")
            raise ModelMismatchError(f"Fitted baseline {baseline:.4g} exceeds 1; |2> population has not saturated")
        if result.covar is None:
            raise ModelMismatchError("Leakage fit covariance is singular; rate not identifiable")

        gamma_up = baseline * rate
        gamma_down = rate - gamma_up
        names = list(result.var_names)
        cov = result.covar
        i_b, i_r = names.index('baseline'), names.index('rate')
        var_b, var_r, cov_br = cov[i_b, i_b], cov[i_r, i_r], cov[i_b, i_r]
        up_var = rate ** 2 * var_b + baseline ** 2 * var_r + 2 * baseline * rate * cov_br
        down_var = rate ** 2 * var_b + (1 - baseline) ** 2 * var_r - 2 * rate * (1 - baseline) * cov_br
        fit = LeakageFit(
            amplitude=amplitude,
            baseline=baseline,
            rate=rate,
            gamma_up=gamma_up,
            gamma_down=gamma_down,
            gamma_up_err=math.sqrt(max(up_var, 0.0)),
            gamma_down_err=math.sqrt(max(down_var, 0.0)),
        )
        logger.info(f"Leakage fit: gamma_up={gamma_up:.4g}, gamma_down={gamma_down:.4g}")
        return fit

    def leakage_per_gate(self, gamma_up_interleaved: float, gamma_up_reference: float) -> LeakagePerGate:
        if gamma_up_interleaved < 0 or gamma_up_reference < 0:
            raise ContractViolationError("Leakage rates must be non-negative")
        rate = gamma_up_interleaved - gamma_up_reference
        if rate < 0:
            logger.warning(f"Interleaved leakage below reference by {-rate:.3g}; floored at 0")
            return LeakagePerGate(rate=0.0, flagged=True)
        return LeakagePerGate(rate=rate)

    # Coherence

    def coherence_limit(
        self,
        t1_c: float,
        t2_c: float,
        t1_t: float,
        t2_t: float,
        gate_len: float,
        d: int = 4,
    ) -> float:
        """Process infidelity from T1/T2 over one gate.

        Per qubit F = 1/2 + exp(-t/T2)/3 + exp(-t/T1)/6, multiplied over both
        qubits and converted with (d+1)/d.
        """
        if min(t1_c, t2_c, t1_t, t2_t) <= 0 or gate_len < 0:
            raise ContractViolationError("Coherence times must be positive and gate length non-negative")
        fidelity = 1.0
        for t1, t2 in ((t1_c, t2_c), (t1_t, t2_t)):
            if t2 > 2 * t1:
                logger.warning(f"T2={t2} exceeds 2*T1={2 * t1}")
            fidelity *= 0.5 + math.exp(-gate_len / t2) / 3 + math.exp(-gate_len / t1) / 6
        return self.average_to_process_infidelity(1.0 - fidelity, d)

    # Synthetic data

    def synth_decay(
        self,
        model: Union[ExponentialModel, LeakageModel],
        lengths: Sequence[int],
        shots: Optional[int],
        seed: int,
        samples: int = 1,
    ) -> DecayDataset:
        """Binomially sampled model data; ``shots=None`` gives exact model values"""
        m = np.asarray(lengths, dtype=float)
        truth = np.clip(model.evaluate(m), 0.0, 1.0)
        kind = 'rb' if isinstance(model, ExponentialModel) else 'leakage_pop'
        if shots is None:
            return DecayDataset(lengths=list(lengths), values=[[float(v)] * samples for v in truth], kind=kind)
        if shots < 1:
            raise ValueError(f"shots must be at least 1, got {shots}")
        rng = np.random.default_rng(seed)
        counts = rng.binomial(shots, np.repeat(truth[:, None], samples, axis=1))
        values = (counts / shots).tolist()
        return DecayDataset(lengths=list(lengths), values=values, kind=kind, shots=shots)


benchmarking_service = BenchmarkingService()
