from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.linalg import eigh

from app.core.config import settings
from app.core.errors import AliasingError, InsufficientDataError, StepTooCoarseError
from app.models.system import BlochVector, DriveConfig, PulseShape, SystemParams
from app.services.hamiltonian_service import HamiltonianService, hamiltonian_service
from app.utils.helpers import wrap_phase

logger = logging.getLogger(__name__)

# H is in MHz and t in ns: phase = 2 pi * 1e-3 * H * t
RAD_PER_MHZ_NS = 2 * math.pi * 1e-3
MIN_RAMSEY_POINTS = 32
ALIASING_LIMIT = math.pi / 2
DEFAULT_RAMSEY_RAMP_NS = 100.0
CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass
class Propagation:
    state: np.ndarray
    times: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class RamseyTrace:
    times_ns: np.ndarray
    phase0: np.ndarray
    phase1: np.ndarray
    freq0_mhz: float
    freq1_mhz: float
    zeta_mhz: float
    zeta_err_mhz: float

    def rows(self) -> List[Dict[str, float]]:
        return [
            {'t_ns': float(t), 'phase0_rad': float(p0), 'phase1_rad': float(p1)}
            for t, p0, p1 in zip(self.times_ns, self.phase0, self.phase1)
        ]


def _bloch_from_states(states: np.ndarray, dims: Tuple[int, int]) -> np.ndarray:
    """Target-qubit Bloch components (x, y, z) for a batch of product-space states.

    Partial trace over the control, then the 2x2 computational block of the
    target; no renormalization, so leakage shortens the vector.
    """
    psi = np.asarray(states).reshape(-1, dims[0], dims[1])
    rho = np.einsum('kci,kcj->kij', psi[:, :, :2], psi[:, :, :2].conj())
    x = 2 * rho[:, 0, 1].real
    y = -2 * rho[:, 0, 1].imag
    z = (rho[:, 0, 0] - rho[:, 1, 1]).real
    return np.stack([x, y, z], axis=-1)


def _to_bloch_vector(components: np.ndarray) -> BlochVector:
    x, y, z = (float(v) for v in components)
    norm = math.sqrt(x * x + y * y + z * z)
    if norm > 1.0:
        x, y, z = x / norm, y / norm, z / norm
    return BlochVector(x=x, y=y, z=z)


class DynamicsService:
    def __init__(self, hamiltonians: HamiltonianService | None = None):
        self.hamiltonians = hamiltonians or hamiltonian_service

    # Pulse shape

    def envelope(self, shape: PulseShape, t):
        """Raised-cosine ramps around a flat top; 0 outside [0, total_duration]"""
        t_arr = np.asarray(t, dtype=float)
        total = shape.total_duration
        ramp = shape.ramp_duration
        s = np.minimum(t_arr, total - t_arr)
        if ramp > 0:
            rising = 0.5 * (1.0 - np.cos(np.pi * np.clip(s, 0.0, ramp) / ramp))
        else:
            rising = np.ones_like(s)
        value = np.where(s >= ramp, 1.0, rising)
        value = np.where((t_arr < 0) | (t_arr > total), 0.0, value)
        return float(value) if np.ndim(value) == 0 else value

    # Time evolution

    def _qubit_frame(self, sys: SystemParams, drive_freq: float, t_ns) -> np.ndarray:
        """Phase factors that undo the bare (omega_i - omega_d) n_i rotation at time t"""
        frame = self.hamiltonians.frame_diagonal(sys, drive_freq)
        return np.exp(1j * RAD_PER_MHZ_NS * np.multiply.outer(np.atleast_1d(t_ns), frame))

    def _step_plan(self, pulse: PulseShape, window: Tuple[float, float], step: float) -> Tuple[float, np.ndarray]:
        t0, t1 = window
        n = max(1, math.ceil((t1 - t0) / step - 1e-9))
        h = (t1 - t0) / n
        midpoints = t0 + (np.arange(n) + 0.5) * h
        return h, self.envelope(pulse, midpoints)

    def _resolve_step(self, pulse: PulseShape, step: Optional[float]) -> float:
        step = settings.default_step_ns if step is None else step
        if step <= 0:
            raise ValueError(f"step must be positive, got {step}")
        if step > pulse.total_duration / 10:
            raise StepTooCoarseError(
                f"step {step} ns exceeds a tenth of the {pulse.total_duration} ns pulse"
            )
        return step

    def _evolve(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        initial: np.ndarray,
        step: Optional[float],
        window: Optional[Tuple[float, float]],
        trajectory: bool,
    ) -> Propagation:
        step = self._resolve_step(pulse, step)
        window = window or (0.0, pulse.total_duration)
        h, env = self._step_plan(pulse, window, step)

        h0 = self.hamiltonians.static_part(sys, drive.drive_freq)
        v = self.hamiltonians.drive_part(sys, drive.eps_c, drive.eps_t)
        cache: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}

        def eigensystem(value: float) -> Tuple[np.ndarray, np.ndarray]:
            key = round(float(value), 13)
            if key not in cache:
                h_t = h0 + key * v
                cache[key] = eigh(0.5 * (h_t + h_t.conj().T))
            return cache[key]

        def apply(q: np.ndarray, phases: np.ndarray, state: np.ndarray) -> np.ndarray:
            rotated = q.conj().T @ state
            rotated = phases * rotated if state.ndim == 1 else phases[:, None] * rotated
            return q @ rotated

        state = np.array(initial, dtype=complex)
        if trajectory:
            states = [state.copy()]
            for value in env:
                w, q = eigensystem(value)
                state = apply(q, np.exp(-1j * RAD_PER_MHZ_NS * w * h), state)
                states.append(state.copy())
            times = window[0] + h * np.arange(len(env) + 1)
            return Propagation(state=state, times=times, trajectory=np.array(states))

        # Runs of identical envelope value (the flat top) collapse into one exponential
        i = 0
        while i < len(env):
            j = i
            while j + 1 < len(env) and env[j + 1] == env[i]:
                j += 1
            w, q = eigensystem(env[i])
            state = apply(q, np.exp(-1j * RAD_PER_MHZ_NS * w * h * (j - i + 1)), state)
            i = j + 1
        logger.debug(f"Propagated {len(env)} steps of {h:.4g} ns with {len(cache)} distinct exponentials")
        return Propagation(state=state)

    def propagate(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        initial: np.ndarray,
        step: Optional[float] = None,
        window: Optional[Tuple[float, float]] = None,
        trajectory: bool = False,
    ) -> Propagation:
        """Evolve a state (drive frame) under the shaped pulse with midpoint piecewise-constant steps.

        ``drive`` holds the peak amplitudes; the envelope scales both. ``window``
        restricts evolution to [t0, t1] so propagators compose.
        """
        return self._evolve(sys, drive, pulse, initial, step, window, trajectory)

    def propagator(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        step: Optional[float] = None,
        window: Optional[Tuple[float, float]] = None,
    ) -> np.ndarray:
        dim = sys.dims[0] * sys.dims[1]
        return self._evolve(sys, drive, pulse, np.eye(dim, dtype=complex), step, window, False).state

    def to_qubit_frame(self, sys: SystemParams, drive_freq: float, t_ns: float, operator: np.ndarray) -> np.ndarray:
        phases = self._qubit_frame(sys, drive_freq, t_ns)[0]
        return phases[:, None] * operator if operator.ndim == 2 else phases * operator

    # Observables

    def product_state(self, sys: SystemParams, control: np.ndarray, target: np.ndarray) -> np.ndarray:
        lc, lt = sys.dims
        c = np.zeros(lc, dtype=complex)
        c[:len(control)] = control
        t = np.zeros(lt, dtype=complex)
        t[:len(target)] = target
        return np.kron(c, t)

    def _ramsey_input(self, sys: SystemParams, n: int) -> np.ndarray:
        control = np.zeros(2, dtype=complex)
        control[n] = 1.0
        return self.product_state(sys, control, np.array([1.0, 1.0]) / math.sqrt(2))

    def conditional_bloch_pair(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        step: Optional[float] = None,
    ) -> Tuple[BlochVector, BlochVector]:
        """Target Bloch vectors after the pulse with the control in |0> and |1>"""
        inputs = np.stack([self._ramsey_input(sys, 0), self._ramsey_input(sys, 1)], axis=1)
        out = self._evolve(sys, drive, pulse, inputs, step, None, False).state
        out = self.to_qubit_frame(sys, drive.drive_freq, pulse.total_duration, out)
        components = _bloch_from_states(out.T, sys.dims)
        return _to_bloch_vector(components[0]), _to_bloch_vector(components[1])

    def conditional_bloch(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        control_state: int,
        step: Optional[float] = None,
    ) -> BlochVector:
        if control_state not in (0, 1):
            raise ValueError(f"control_state must be 0 or 1, got {control_state}")
        psi = self._evolve(sys, drive, pulse, self._ramsey_input(sys, control_state), step, None, False).state
        psi = self.to_qubit_frame(sys, drive.drive_freq, pulse.total_duration, psi)
        return _to_bloch_vector(_bloch_from_states(psi, sys.dims)[0])

    def r_metric(self, r0: BlochVector, r1: BlochVector) -> float:
        """Half the squared distance between the conditional target Bloch vectors"""
        diff = r0.as_array() - r1.as_array()
        return float(diff @ diff) / 2

    def conditional_phase(self, r0: BlochVector, r1: BlochVector) -> float:
        return wrap_phase(math.atan2(r1.y, r1.x) - math.atan2(r0.y, r0.x))

    def ramsey_zz(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        times_ns: Sequence[float],
        preparation: Literal['adiabatic', 'sudden'] = 'adiabatic',
        ramp_ns: float = DEFAULT_RAMSEY_RAMP_NS,
        step: Optional[float] = None,
    ) -> RamseyTrace:
        """Simulated Ramsey ZZ under a constant drive.

        The target starts in (|0>+|1>)/sqrt(2) with the control in |0> or |1>;
        the equatorial phase is unwrapped and fitted linearly against the hold
        time for each control state, and the frequency difference is the ZZ rate.

        ``adiabatic`` ramps the drive up over ``ramp_ns`` with a raised cosine,
        holds it for each time on the grid and ramps it down again, all by
        propagation. ``sudden`` switches the drive on and off instantly; the
        bare states then beat between dressed states, which is only harmless
        at weak drive.
        """
        times = np.asarray(times_ns, dtype=float)
        if times.size < MIN_RAMSEY_POINTS:
            raise InsufficientDataError(f"Ramsey grid needs {MIN_RAMSEY_POINTS} points, got {times.size}")
        if np.any(np.diff(times) <= 0):
            raise InsufficientDataError("Ramsey times must be strictly increasing")
        if preparation not in ('adiabatic', 'sudden'):
            raise ValueError(f"preparation must be 'adiabatic' or 'sudden', got {preparation!r}")

        inputs = np.stack([self._ramsey_input(sys, 0), self._ramsey_input(sys, 1)], axis=1)
        if preparation == 'adiabatic':
            if ramp_ns <= 0:
                raise ValueError(f"ramp_ns must be positive, got {ramp_ns}")
            ramps = PulseShape(total_duration=2 * ramp_ns, flat_fraction=0.0)
            prepared = self._evolve(sys, drive, ramps, inputs, step, (0.0, ramp_ns), False).state
            release = self.propagator(sys, drive, ramps, step, window=(ramp_ns, 2 * ramp_ns))
            offset = 2 * ramp_ns
        else:
            prepared = inputs
            release = None
            offset = 0.0

        w, q = eigh(self.hamiltonians.build_hamiltonian(sys, drive).entries)
        hold = np.exp(-1j * RAD_PER_MHZ_NS * np.multiply.outer(times, w))
        frame = self._qubit_frame(sys, drive.drive_freq, times + offset)

        phases = []
        for n in (0, 1):
            coefficients = q.conj().T @ prepared[:, n]
            states = (hold * coefficients) @ q.T
            if release is not None:
                states = states @ release.T
            bloch = _bloch_from_states(states * frame, sys.dims)
            wrapped = np.arctan2(bloch[:, 1], bloch[:, 0])
            increments = np.angle(np.exp(1j * np.diff(wrapped)))
            if np.any(np.abs(increments) > ALIASING_LIMIT):
                logger.error(f"Ramsey phase aliasing for control |{n}>: max step {np.abs(increments).max():.3g} rad")
                raise AliasingError(
                    f"Ramsey phase advances up to {np.abs(increments).max():.3g} rad per sample "
                    f"(limit {ALIASING_LIMIT:.3g}); use a denser time grid"
                )
            phases.append(np.unwrap(wrapped))

        t_us = times * 1e-3
        freqs, variances = [], []
        for phase in phases:
            coeffs, cov = np.polyfit(t_us, phase, 1, cov=True)
            freqs.append(-coeffs[0] / (2 * math.pi))
            variances.append(cov[0, 0] / (2 * math.pi) ** 2)
        zeta = freqs[1] - freqs[0]
        trace = RamseyTrace(
            times_ns=times,
            phase0=phases[0],
            phase1=phases[1],
            freq0_mhz=float(freqs[0]),
            freq1_mhz=float(freqs[1]),
            zeta_mhz=float(zeta),
            zeta_err_mhz=float(math.sqrt(max(variances[0] + variances[1], 0.0))),
        )
        logger.info(f"Ramsey ZZ: {trace.zeta_mhz:.6g} +/- {trace.zeta_err_mhz:.2g} MHz over {times.size} points")
        return trace

    # Two-qubit gate view

    def computational_unitary(
        self,
        sys: SystemParams,
        drive: DriveConfig,
        pulse: PulseShape,
        step: Optional[float] = None,
    ) -> np.ndarray:
        """4x4 computational block of the pulse propagator in the qubits' frames, index 2*c + t"""
        u = self.propagator(sys, drive, pulse, step)
        u = self.to_qubit_frame(sys, drive.drive_freq, pulse.total_duration, u)
        idx = [self.hamiltonians.bare_index(sys, c, t) for c in (0, 1) for t in (0, 1)]
        return u[np.ix_(idx, idx)]

    def zz_angles(self, u4: np.ndarray) -> Tuple[float, float, float]:
        """(alpha_IZ, beta_ZI, theta_ZZ) of exp(-i/2 (alpha IZ + beta ZI + theta ZZ)), each modulo pi.

        Ideal CZ gives theta = pi/2.
        """
        d = np.diag(u4)
        theta = -np.angle(d[0] * d[3] * np.conj(d[1]) * np.conj(d[2])) / 2
        alpha = -np.angle(d[0] * d[2] * np.conj(d[1]) * np.conj(d[3])) / 2
        beta = -np.angle(d[0] * d[1] * np.conj(d[2]) * np.conj(d[3])) / 2

        def half_open(angle: float) -> float:
            return float(angle + math.pi if angle <= -math.pi / 2 else angle)

        return half_open(alpha), half_open(beta), half_open(theta)

    def average_gate_fidelity(self, u4: np.ndarray, target: np.ndarray = CZ) -> float:
        """(Tr(M M^dag) + |Tr M|^2) / (d(d+1)) with M = target^dag U; leakage lowers Tr(M M^dag)"""
        m = target.conj().T @ u4
        d = m.shape[0]
        return float((np.trace(m @ m.conj().T).real + abs(np.trace(m)) ** 2) / (d * (d + 1)))


dynamics_service = DynamicsService()
