from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

DecayKind = Literal['rb', 'irb', 'cb_pauli', 'purity', 'leakage_pop']


class DecayDataset(BaseModel):
    """Survival (or population) samples per sequence length"""

    model_config = ConfigDict(frozen=True)

    lengths: List[int]
    values: List[List[float]]
    kind: DecayKind = 'rb'
    label: Optional[str] = Field(None, description="Pauli label for cb_pauli data")
    shots: Optional[int] = Field(None, ge=1, description="Shots behind each sample, if known")

    @model_validator(mode='after')
    def _check_shape(self) -> 'DecayDataset':
        if len(self.lengths) != len(self.values):
            raise ValueError('lengths and values must have the same number of entries')
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError('lengths must be strictly increasing')
        if any(m < 0 for m in self.lengths):
            raise ValueError('lengths must be non-negative')
        for samples in self.values:
            if not samples:
                raise ValueError('every length needs at least one sample')
            if any(not (0.0 <= v <= 1.0) for v in samples):
                raise ValueError('values must lie in [0, 1]')
        if self.kind == 'cb_pauli' and not self.label:
            raise ValueError('cb_pauli data needs a Pauli label')
        return self

    @classmethod
    def from_means(cls, lengths: List[int], means: List[float], **kwargs) -> 'DecayDataset':
        return cls(lengths=list(lengths), values=[[float(v)] for v in means], **kwargs)

    def mean_values(self) -> np.ndarray:
        return np.array([np.mean(v) for v in self.values])

    def sample_counts(self) -> np.ndarray:
        return np.array([len(v) for v in self.values])


class DecayFit(BaseModel):
    amplitude: float
    decay: float
    amplitude_err: float
    decay_err: float
    clamped: bool = False
    redchi: float = 0.0
    n_lengths: int


class LeakageFit(BaseModel):
    amplitude: float
    baseline: float
    rate: float
    gamma_up: float = Field(..., ge=0)
    gamma_down: float = Field(..., ge=0)
    gamma_up_err: float
    gamma_down_err: float


class ErrorBudget(BaseModel):
    """Process infidelity split into stochastic and coherent parts"""

    e_f: float = Field(..., ge=0)
    e_s: float = Field(..., ge=0)
    e_u: float = Field(..., ge=0)
    flagged: bool = False

    @model_validator(mode='after')
    def _additive(self) -> 'ErrorBudget':
        if abs(self.e_f - self.e_s - self.e_u) > 1e-12:
            raise ValueError('e_f must equal e_s + e_u')
        return self


class InterleavedResult(BaseModel):
    fidelity: float
    error: float
    warning: Optional[str] = None


class CycleBenchmarkReport(BaseModel):
    error_rates: Dict[str, float]
    mean_decay: float
    process_infidelity: float

    @computed_field
    @property
    def process_fidelity(self) -> float:
        return 1.0 - self.process_infidelity


class LeakagePerGate(BaseModel):
    rate: float
    flagged: bool = False


class ExponentialModel(BaseModel):
    kind: Literal['exponential'] = 'exponential'
    amplitude: float = Field(..., ge=0)
    decay: float = Field(..., gt=0, le=1)

    def evaluate(self, lengths: np.ndarray) -> np.ndarray:
        return self.amplitude * self.decay ** np.asarray(lengths, dtype=float)


class LeakageModel(BaseModel):
    """|2> population B - A exp(-Gamma m) of the leakage rate equations"""

    kind: Literal['leakage'] = 'leakage'
    amplitude: float
    baseline: float = Field(..., ge=0, le=1)
    rate: float = Field(..., gt=0)

    @classmethod
    def from_rates(cls, gamma_up: float, gamma_down: float, initial: float = 0.0) -> 'LeakageModel':
        rate = gamma_up + gamma_down
        baseline = gamma_up / rate
        return cls(amplitude=baseline - initial, baseline=baseline, rate=rate)

    def evaluate(self, lengths: np.ndarray) -> np.ndarray:
        return self.baseline - self.amplitude * np.exp(-self.rate * np.asarray(lengths, dtype=float))
