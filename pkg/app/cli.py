from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import logging
import sys

import click
import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ConfigError, LabelingError, ZZLabError
from app.models.benchmarking import ExponentialModel, LeakageModel
from app.models.run import RunConfig
from app.models.system import CrosstalkCalibration
from app.services.benchmarking_service import benchmarking_service
from app.services.calibration_service import calibration_service
from app.services.crosstalk_service import crosstalk_service
from app.services.dataset_service import dataset_service
from app.services.dynamics_service import DEFAULT_RAMSEY_RAMP_NS, dynamics_service
from app.services.spectrum_service import spectrum_service
from app.services.sweep_service import sweep_service
from app.utils.helpers import file_digest

logger = logging.getLogger("app.cli")


def _handle_errors(func):
    """Domain errors exit 1, invalid input exits 2"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"Invalid input: {e}")
            click.echo(f"Error: invalid input\n{e}", err=True)
            sys.exit(2)
        except ZZLabError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"Error: {type(e).__name__}: {e}", err=True)
            sys.exit(1)

    return wrapper


def _load_config(ctx: click.Context, path: str) -> RunConfig:
    config = RunConfig.model_validate_json(Path(path).read_text(encoding='utf-8'))
    return config.with_overrides(**ctx.obj['overrides'])


def _out_dir(out: Optional[str], command: str, config: Optional[RunConfig] = None) -> Path:
    if out:
        return Path(out)
    if config is not None and config.output.path:
        return Path(config.output.path)
    return Path(settings.output_dir) / command


def _finish(
    out_dir: Path,
    command: str,
    report: Dict[str, Any],
    config: Any = None,
    seed: Optional[int] = None,
    flags: Optional[Dict[str, int]] = None,
    inputs: Sequence[str] = (),
    outputs: Sequence[Path] = (),
) -> None:
    report = {**report, 'inputs': {Path(p).name: file_digest(p) for p in inputs}}
    report_path = dataset_service.write_json(out_dir / 'report.json', report)
    dataset_service.write_manifest(
        out_dir, command, config or {}, seed=seed, flags=flags,
        inputs=inputs, outputs=[*outputs, report_path],
    )
    click.echo(f"Wrote {report_path}")


@click.group()
@click.option('--seed', type=int, default=None, help='Seed for synthetic data')
@click.option('--levels', type=click.IntRange(min=3), default=None, help='Levels kept per transmon')
@click.option('--step-ns', type=click.FloatRange(min=0, min_open=True), default=None, help='Propagator step in ns')
@click.option('--jobs', type=click.IntRange(min=0), default=None, help='Worker processes (0 = all processors)')
@click.option('--log-level', default=None, help='Logging level')
@click.pass_context
def cli(ctx, seed, levels, step_ns, jobs, log_level):
    """Stark ZZ lab: ZZ sweeps, CZ calibration and benchmarking fits"""
    logging.basicConfig(
        level=getattr(logging, (log_level or settings.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    ctx.ensure_object(dict)
    ctx.obj['overrides'] = {'seed': seed, 'levels': levels, 'step_ns': step_ns, 'jobs': jobs}


@cli.command('zz-sweep')
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', type=click.Path(file_okay=False), default=None)
@click.pass_context
@_handle_errors
def zz_sweep(ctx, config_path, out):
    """ZZ rate (exact and perturbative) over the configured grid"""
    config = _load_config(ctx, config_path)
    sys_params = config.resolved_system()
    result = sweep_service.run_sweep(sys_params, config.drive, config.sweep, config.crosstalk, config.jobs)
    out_dir = _out_dir(out, 'zz_sweep', config)
    if config.output.format == 'json':
        data_path = dataset_service.write_json(out_dir / 'zz_sweep.json', result.rows)
    else:
        data_path = dataset_service.write_csv(out_dir / 'zz_sweep.csv', result.rows, result.columns)
    base_drive = crosstalk_service.drive_for(
        config.crosstalk or CrosstalkCalibration(), config.drive.resolve_freq(sys_params),
        config.drive.amp_c, config.drive.amp_t, config.drive.phi_d,
    )
    levels = sys_params.control.levels
    try:
        zeta_low, zeta_high, rel = spectrum_service.truncation_convergence(sys_params, base_drive, (levels, levels + 2))
        truncation = {'levels': [levels, levels + 2], 'zeta_mhz': [zeta_low, zeta_high], 'relative_change': rel}
    except LabelingError as e:
        logger.warning(f"Truncation check skipped: {e}")
        truncation = None
    report = {
        'points': len(result.rows),
        'flag_counts': result.flag_counts,
        'data': data_path.name,
        'truncation': truncation,
    }
    _finish(out_dir, 'zz-sweep', report, config.model_dump(mode='json'), config.seed,
            result.flag_counts, [config_path], [data_path])


@cli.command('calibrate')
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', type=click.Path(file_okay=False), default=None)
@click.pass_context
@_handle_errors
def calibrate(ctx, config_path, out):
    """Simulated CZ calibration: R map, CZ point, local-Z corrections"""
    config = _load_config(ctx, config_path)
    if config.pulse is None or config.calibration is None:
        raise ConfigError('calibration', "calibrate needs both 'pulse' and 'calibration' sections")
    report, rmap = calibration_service.calibrate_cz(
        config.resolved_system(), config.crosstalk or CrosstalkCalibration(), config.pulse,
        config.calibration, config.step_ns, config.jobs,
    )
    out_dir = _out_dir(out, 'calibrate', config)
    map_path = dataset_service.write_csv(out_dir / 'r_map.csv', rmap.rows(), ('a', 'freq_mhz', 'r_value'))
    _finish(out_dir, 'calibrate', report.model_dump(mode='json'), config.model_dump(mode='json'),
            config.seed, {'flagged_cells': rmap.flagged}, [config_path], [map_path])


@cli.command('ramsey')
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--t-max', type=float, default=None, help='Last evolution time in ns')
@click.option('--points', type=click.IntRange(min=32), default=256)
@click.option('--ramp-ns', type=click.FloatRange(min=0, min_open=True), default=DEFAULT_RAMSEY_RAMP_NS,
              help='Raised-cosine ramp before and after each hold')
@click.option('--out', type=click.Path(file_okay=False), default=None)
@click.pass_context
@_handle_errors
def ramsey(ctx, config_path, t_max, points, ramp_ns, out):
    """Simulated Ramsey ZZ under the configured constant drive"""
    config = _load_config(ctx, config_path)
    sys_params = config.resolved_system()
    drive = crosstalk_service.drive_for(
        config.crosstalk or CrosstalkCalibration(), config.drive.resolve_freq(sys_params),
        config.drive.amp_c, config.drive.amp_t, config.drive.phi_d,
    )
    expected = spectrum_service.zz_rate(sys_params, drive)
    if t_max is None:
        # two and a half periods of the expected shift
        t_max = min(2.5e3 / max(abs(expected), 1e-3), 2e4)
    times = np.linspace(0.0, t_max, points)
    trace = dynamics_service.ramsey_zz(sys_params, drive, times, ramp_ns=ramp_ns, step=config.step_ns)
    out_dir = _out_dir(out, 'ramsey', config)
    trace_path = dataset_service.write_csv(out_dir / 'ramsey.csv', trace.rows(), ('t_ns', 'phase0_rad', 'phase1_rad'))
    report = {
        'zeta_ramsey_mhz': trace.zeta_mhz,
        'zeta_ramsey_err_mhz': trace.zeta_err_mhz,
        'zeta_eigen_mhz': expected,
        'freq0_mhz': trace.freq0_mhz,
        'freq1_mhz': trace.freq1_mhz,
        'ramp_ns': ramp_ns,
    }
    _finish(out_dir, 'ramsey', report, config.model_dump(mode='json'), config.seed,
            None, [config_path], [trace_path])


@cli.command('synth')
@click.argument('model', type=click.Choice(['exponential', 'leakage']))
@click.option('--lengths', required=True, help='Comma-separated sequence lengths')
@click.option('--shots', type=click.IntRange(min=1), default=None, help='Omit for exact model values')
@click.option('--samples', type=click.IntRange(min=1), default=1)
@click.option('--amplitude', type=float, default=None)
@click.option('--decay', type=float, default=None)
@click.option('--gamma-up', type=float, default=None)
@click.option('--gamma-down', type=float, default=None)
@click.option('--out', type=click.Path(dir_okay=False), required=True)
@click.pass_context
@_handle_errors
def synth(ctx, model, lengths, shots, samples, amplitude, decay, gamma_up, gamma_down, out):
    """Synthetic m,value dataset for fitter validation"""
    try:
        m = [int(v) for v in lengths.split(',') if v.strip()]
    except ValueError:
        raise ConfigError('lengths', f"Cannot parse lengths '{lengths}'")
    seed = ctx.obj['overrides']['seed']
    seed = settings.seed if seed is None else seed
    if model == 'exponential':
        if amplitude is None or decay is None:
            raise ConfigError('exponential', "exponential model needs --amplitude and --decay")
        decay_model = ExponentialModel(amplitude=amplitude, decay=decay)
    else:
        if gamma_up is None or gamma_down is None:
            raise ConfigError('leakage', "leakage model needs --gamma-up and --gamma-down")
        decay_model = LeakageModel.from_rates(gamma_up, gamma_down)
    data = benchmarking_service.synth_decay(decay_model, m, shots, seed, samples)
    path = dataset_service.write_decay_csv(out, data)
    dataset_service.write_manifest(
        Path(out).parent, 'synth', {'model': decay_model.model_dump(), 'lengths': m, 'shots': shots, 'samples': samples},
        seed=seed, outputs=[path],
    )
    click.echo(f"Wrote {path}")


@cli.group('fit')
def fit():
    """Fit benchmarking or crosstalk data and write a JSON report"""


def _fit_out(out: Optional[str], kind: str) -> Path:
    return Path(out) if out else Path(settings.output_dir) / f'fit_{kind}'


@fit.command('crosstalk')
@click.option('--data', 'data_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@click.pass_context
@_handle_errors
def fit_crosstalk(ctx, data_path, config_path, out):
    config = _load_config(ctx, config_path)
    sys_params = config.resolved_system()
    points = dataset_service.read_sweep_csv(data_path)
    result = crosstalk_service.fit_crosstalk(
        points, sys_params, config.drive.resolve_freq(sys_params), config.crosstalk
    )
    _finish(_fit_out(out, 'crosstalk'), 'fit crosstalk', result.model_dump(mode='json'),
            config.model_dump(mode='json'), inputs=[data_path, config_path])


@fit.command('rb')
@click.option('--data', 'data_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--shots', type=click.IntRange(min=1), default=None)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@_handle_errors
def fit_rb(data_path, shots, out):
    data = dataset_service.read_decay_csv(data_path, 'rb', shots=shots)
    result = benchmarking_service.fit_decay(data)
    _finish(_fit_out(out, 'rb'), 'fit rb', {'fit': result.model_dump()}, inputs=[data_path])


@fit.command('irb')
@click.option('--reference', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--interleaved', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--p-ref', type=float, default=None)
@click.option('--p-int', type=float, default=None)
@click.option('--shots', type=click.IntRange(min=1), default=None)
@click.option('--d', 'dim', type=int, default=4)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@_handle_errors
def fit_irb(reference, interleaved, p_ref, p_int, shots, dim, out):
    """Interleaved RB from two datasets or from fitted decays"""
    inputs: List[str] = []
    report: Dict[str, Any] = {}
    if p_ref is None:
        if reference is None:
            raise ConfigError('reference', "give --reference or --p-ref")
        ref_fit = benchmarking_service.fit_decay(dataset_service.read_decay_csv(reference, 'rb', shots=shots))
        p_ref = ref_fit.decay
        report['reference_fit'] = ref_fit.model_dump()
        inputs.append(reference)
    if p_int is None:
        if interleaved is None:
            raise ConfigError('interleaved', "give --interleaved or --p-int")
        int_fit = benchmarking_service.fit_decay(dataset_service.read_decay_csv(interleaved, 'irb', shots=shots))
        p_int = int_fit.decay
        report['interleaved_fit'] = int_fit.model_dump()
        inputs.append(interleaved)
    result = benchmarking_service.interleaved_fidelity(p_ref, p_int, dim)
    report.update({'p_ref': p_ref, 'p_int': p_int, 'd': dim, **result.model_dump()})
    _finish(_fit_out(out, 'irb'), 'fit irb', report, inputs=inputs)


@fit.command('cb')
@click.option('--cycle', type=click.Path(exists=True, dir_okay=False), required=True,
              help='pauli_label,p,sigma for the interleaved cycle')
@click.option('--identity', type=click.Path(exists=True, dir_okay=False), default=None,
              help='pauli_label,p,sigma for the reference (identity) cycle')
@click.option('--d', 'dim', type=int, default=4)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@_handle_errors
def fit_cb(cycle, identity, dim, out):
    cycle_decays = {k: p for k, (p, _) in dataset_service.read_cb_csv(cycle).items()}
    cycle_report = benchmarking_service.cb_analyze(cycle_decays, dim)
    report: Dict[str, Any] = {'cycle': cycle_report.model_dump()}
    inputs = [cycle]
    if identity:
        ref_decays = {k: p for k, (p, _) in dataset_service.read_cb_csv(identity).items()}
        ref_report = benchmarking_service.cb_analyze(ref_decays, dim)
        gate = benchmarking_service.interleaved_fidelity(ref_report.mean_decay, cycle_report.mean_decay, dim)
        report.update({'identity': ref_report.model_dump(), **gate.model_dump()})
        inputs.append(identity)
    _finish(_fit_out(out, 'cb'), 'fit cb', report, inputs=inputs)


@fit.command('xrb')
@click.option('--rb', 'rb_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--purity', 'purity_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--shots', type=click.IntRange(min=1), default=None)
@click.option('--d', 'dim', type=int, default=4)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@_handle_errors
def fit_xrb(rb_path, purity_path, shots, dim, out):
    """Coherent/stochastic error budget from RB and purity decays"""
    rb_fit = benchmarking_service.fit_decay(dataset_service.read_decay_csv(rb_path, 'rb', shots=shots))
    u_fit = benchmarking_service.fit_unitarity(dataset_service.read_decay_csv(purity_path, 'purity'), dim)
    budget = benchmarking_service.xrb_decompose(rb_fit.decay, min(u_fit.decay, 1.0), dim)
    report = {'rb_fit': rb_fit.model_dump(), 'unitarity_fit': u_fit.model_dump(), 'budget': budget.model_dump()}
    _finish(_fit_out(out, 'xrb'), 'fit xrb', report, inputs=[rb_path, purity_path])


@fit.command('lrb')
@click.option('--reference', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--interleaved', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--out', type=click.Path(file_okay=False), default=None)
@_handle_errors
def fit_lrb(reference, interleaved, out):
    """Leakage rates for reference and interleaved |2> populations, and leakage per gate"""
    ref_fit = benchmarking_service.lrb_fit(dataset_service.read_decay_csv(reference, 'leakage_pop'))
    int_fit = benchmarking_service.lrb_fit(dataset_service.read_decay_csv(interleaved, 'leakage_pop'))
    per_gate = benchmarking_service.leakage_per_gate(int_fit.gamma_up, ref_fit.gamma_up)
    report = {'reference': ref_fit.model_dump(), 'interleaved': int_fit.model_dump(),
              'leakage_per_gate': per_gate.model_dump()}
    _finish(_fit_out(out, 'lrb'), 'fit lrb', report, inputs=[reference, interleaved])


if __name__ == '__main__':
    cli()
