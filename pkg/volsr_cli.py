#!/usr/bin/env python3
"""
Volsr CLI - Volumetric Super-Resolution Pipeline
================================================

Command-line interface driving the whole pipeline: synthesize or ingest a
field, build a patch dataset, train a super-resolver, reconstruct a full
field, run interpolation baselines and write the evaluation report.

Every command writes into its --out directory, together with
config.resolved.json and provenance.json (input and output hashes).

Usage:
    volsr synth --dims 64,64,64 [--seed N] [--components u,v,w] --out DIR
    volsr ingest --raw FILE --dims X,Y,Z [--dtype f32|f64] --out DIR
    volsr dataset --field FILE [--A 4] [--s 4] [--component u] --out DIR
    volsr train-vae --dataset DIR [--epochs N] [--seed N] --out DIR
    volsr train-gan --dataset DIR [--epochs N] [--seed N] --out DIR
    volsr infer --checkpoint FILE --dataset DIR --field FILE --out DIR
    volsr baseline --field FILE (--scale F | --dims X,Y,Z) [--kernel K] --out DIR
    volsr eval --truth FILE --coarse FILE --pred NAME=FILE ... [--plane z=mid] --out DIR
    volsr history [--limit N] [--output json]

Exit codes: 0 ok, 1 unexpected, 2 usage/config, 3 format, 4 numeric, 5 manifest.

Version: 1.0.0
"""

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.config_manager import PipelineConfig, VolsrConfigManager, write_resolved_config  # noqa: E402
from app.run_registry import RunRegistryService  # noqa: E402
from volsr import __version__  # noqa: E402
from volsr.core import runtime  # noqa: E402
from volsr.errors import ConfigError, ManifestMismatchError, VolsrError  # noqa: E402
from volsr.interp import BASELINE_KINDS, lift_to_grid, resample3d  # noqa: E402
from volsr.io import (  # noqa: E402
    CHANNEL_DOMAIN,
    VolumeField,
    atomic_write_json,
    field_hash,
    ingest_raw,
    read_volume,
    sha256_file,
    synth_field,
    write_volume,
)
from volsr.networks import PassthroughModel, load_checkpoint, save_checkpoint, train_gan, train_vae  # noqa: E402
from volsr.patches import build_dataset, compute_norm_stats, load_dataset, load_manifest, save_dataset  # noqa: E402
from volsr.spectral import eval_report  # noqa: E402
from volsr.stitch import mask_field, reconstruct_full  # noqa: E402

logger = logging.getLogger(__name__)

PROVENANCE_NAME = 'provenance.json'
FIELD_NAME = 'field.volsr'
CHECKPOINT_NAME = 'checkpoint.ckpt'
HISTORY_NAME = 'history.json'
PREDICTION_NAME = 'prediction.volsr'
COVERAGE_NAME = 'coverage.volsr'
BASELINE_NAME = 'baseline.volsr'

_PI_TERM = re.compile(r'^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*$')


def parse_triple(text: str, cast=int, name: str = 'value') -> Tuple:
    """'64,64,32' -> (64, 64, 32); a single value is repeated on every axis"""
    try:
        parts = [cast(part) for part in str(text).split(',')]
    except ValueError as e:
        raise ConfigError(f"{name} must be one or three comma-separated numbers, got {text!r}") from e
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ConfigError(f"{name} must have 3 entries, got {text!r}")
    return tuple(parts)


def parse_length(text: str) -> float:
    """'2', '8pi', '3*pi', 'pi'"""
    match = _PI_TERM.match(text)
    if match:
        factor = match.group(1)
        return (float(factor) if factor else 1.0) * math.pi
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"domain length must be a number or a multiple of pi, got {text!r}") from e


def parse_domain(text: Optional[str]) -> Tuple[float, float, float]:
    if text is None:
        return CHANNEL_DOMAIN
    parts = [parse_length(part) for part in text.split(',')]
    if len(parts) != 3 or min(parts) <= 0:
        raise ConfigError(f"domain must be three positive lengths, got {text!r}")
    return tuple(parts)


def parse_components(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(',') if part.strip())


def parse_predictions(items: Optional[Sequence[str]]) -> Dict[str, str]:
    predictions: Dict[str, str] = {}
    for item in items or []:
        name, sep, path = item.partition('=')
        if not sep or not name or not path:
            raise ConfigError(f"--pred expects NAME=PATH, got {item!r}")
        if name in predictions:
            raise ConfigError(f"prediction '{name}' given twice")
        predictions[name] = path
    return predictions


def require_file(path: str, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


class VolsrCLI:
    """Main CLI class for the volsr pipeline"""

    def __init__(self, config: Optional[PipelineConfig] = None, output_format: str = 'human',
                 registry: Optional[RunRegistryService] = None):
        self.config = config or PipelineConfig()
        self.output_format = output_format
        self.registry = registry
        self.inputs: Dict[str, str] = {}

    # ========================================================================
    # Provenance
    # ========================================================================

    def _record_input(self, label: str, path: Path) -> None:
        self.inputs[label] = sha256_file(path)

    def _finish(self, command: str, out_dir: Path, arguments: Dict[str, Any],
                outputs: Dict[str, Path], result: Dict[str, Any]) -> Dict[str, Any]:
        """Write config.resolved.json and provenance.json, then report the result"""
        write_resolved_config(self.config, out_dir)
        atomic_write_json(out_dir / PROVENANCE_NAME, {
            'command': command,
            'volsr_version': __version__,
            'arguments': arguments,
            'inputs': dict(self.inputs),
            'outputs': {name: sha256_file(path) for name, path in sorted(outputs.items())},
        })
        result = dict(result, command=command, out=str(out_dir))
        self._emit(result)
        return result

    def _emit(self, result: Dict[str, Any]) -> None:
        if self.output_format == 'json':
            print(json.dumps(result, indent=2, sort_keys=True))
            return
        print(f"✅ {result['command']} -> {result['out']}")
        for key, value in result.items():
            if key in ('command', 'out'):
                continue
            if isinstance(value, float):
                value = f"{value:.6g}"
            print(f"   {key}: {value}")

    # ========================================================================
    # Field commands
    # ========================================================================

    def synth(self, dims: str, out: str, seed: Optional[int] = None, components: str = 'u,v,w',
              domain: Optional[str] = None, mean_velocity: float = 0.0, num_modes: int = 64,
              time_tag: int = 0) -> Dict[str, Any]:
        seed = self.config.seeds.data if seed is None else seed
        if seed != self.config.seeds.data:
            self.config = self.config.with_overrides({'seeds': {'data': seed}})
        volume = synth_field(parse_triple(dims, int, 'dims'), domain=parse_domain(domain), seed=seed,
                             num_modes=num_modes, components=parse_components(components),
                             mean_velocity=mean_velocity, time_tag=time_tag,
                             dtype=runtime.default_dtype())
        out_dir = Path(out)
        path = write_volume(volume, out_dir / FIELD_NAME)
        arguments = {'dims': list(volume.dims), 'seed': seed, 'components': list(volume.components),
                     'domain': list(volume.domain), 'mean_velocity': mean_velocity,
                     'num_modes': num_modes, 'time_tag': time_tag}
        return self._finish('synth', out_dir, arguments, {FIELD_NAME: path},
                            {'field': str(path), 'dims': list(volume.dims), 'hash': field_hash(volume)})

    def ingest(self, raw: str, dims: str, out: str, dtype: str = 'f32', components: str = 'u',
               domain: Optional[str] = None, order: str = 'x-fastest', time_tag: int = 0) -> Dict[str, Any]:
        raw_path = require_file(raw, 'raw input')
        self._record_input('raw', raw_path)
        volume = ingest_raw(raw_path, parse_triple(dims, int, 'dims'), dtype=dtype,
                            components=parse_components(components), domain=parse_domain(domain),
                            time_tag=time_tag, order=order)
        out_dir = Path(out)
        path = write_volume(volume, out_dir / FIELD_NAME)
        arguments = {'dims': list(volume.dims), 'dtype': dtype, 'components': list(volume.components),
                     'domain': list(volume.domain), 'order': order, 'time_tag': time_tag}
        return self._finish('ingest', out_dir, arguments, {FIELD_NAME: path},
                            {'field': str(path), 'dims': list(volume.dims), 'hash': field_hash(volume)})

    # ========================================================================
    # Dataset and training
    # ========================================================================

    def dataset(self, field: str, out: str, A: Optional[int] = None, s: Optional[int] = None,
                component: Optional[str] = None, upsample_method: Optional[str] = None,
                prefilter: Optional[bool] = None) -> Dict[str, Any]:
        field_path = require_file(field, 'field')
        self._record_input('field', field_path)
        self.config = self.config.with_overrides({'patch': {
            'A': A, 's': s, 'component': component, 'upsample_method': upsample_method, 'prefilter': prefilter,
        }})
        spec = self.config.patch
        volume = read_volume(field_path)
        stats = compute_norm_stats(volume, spec.component)
        pairs = build_dataset(volume, spec, stats)
        out_dir = Path(out)
        manifest = save_dataset(pairs, spec, stats, field_hash(volume), out_dir)
        outputs = {name: out_dir / name for name in ('lr.volsr', 'hr.volsr', 'manifest.json')}
        return self._finish('dataset', out_dir, {'patch': spec.model_dump(mode='json')}, outputs, {
            'pairs': manifest.count,
            'manifest_hash': manifest.manifest_hash(),
            'mean': stats.mean,
            'std': stats.std,
        })

    def _training_setup(self, kind: str, epochs: Optional[int], batch_size: Optional[int],
                        learning_rate: Optional[float], seed: Optional[int],
                        validation_fraction: Optional[float] = None):
        self.config = self.config.with_overrides({
            'training': {'epochs': epochs, 'batch_size': batch_size, 'learning_rate': learning_rate,
                         'validation_fraction': validation_fraction},
            'seeds': {'train': seed},
        })
        training = self.config.training.model_copy(update={'seed': self.config.seeds.train})
        model_config = getattr(self.config, kind).model_copy(update={'seed': self.config.seeds.model})
        return training, model_config

    def train(self, kind: str, dataset: str, out: str, epochs: Optional[int] = None,
              batch_size: Optional[int] = None, learning_rate: Optional[float] = None,
              seed: Optional[int] = None, validation_fraction: Optional[float] = None) -> Dict[str, Any]:
        """Shared body of train-vae and train-gan"""
        manifest_path = require_file(str(Path(dataset) / 'manifest.json'), 'dataset manifest')
        self._record_input('manifest', manifest_path)
        pairs, manifest = load_dataset(dataset)
        training, model_config = self._training_setup(kind, epochs, batch_size, learning_rate, seed,
                                                       validation_fraction)
        if model_config.input_size != manifest.spec.patch_out:
            raise ConfigError(f"{kind}.input_size={model_config.input_size} but the dataset holds "
                              f"{manifest.spec.patch_out}^3 cubes")
        trainer = train_vae if kind == 'vae' else train_gan
        logger.info("🔍 training %s on %d pairs for %d epochs", kind, len(pairs), training.epochs)
        model, history = trainer(pairs, model_config, training)
        out_dir = Path(out)
        checkpoint = save_checkpoint(model, out_dir / CHECKPOINT_NAME, epoch=training.epochs,
                                     history=history, manifest_hash=manifest.manifest_hash())
        history_path = atomic_write_json(out_dir / HISTORY_NAME, {'kind': kind, 'history': history})
        arguments = {'training': training.model_dump(mode='json'), kind: model_config.model_dump(mode='json')}
        result = {'checkpoint': str(checkpoint), 'epochs': training.epochs, 'pairs': len(pairs)}
        if history:
            result['final'] = {k: v for k, v in history[-1].items() if k != 'epoch'}
        return self._finish(f'train-{kind}', out_dir, arguments,
                            {CHECKPOINT_NAME: checkpoint, HISTORY_NAME: history_path}, result)

    # ========================================================================
    # Reconstruction and baselines
    # ========================================================================

    def infer(self, field: str, dataset: str, out: str, checkpoint: Optional[str] = None,
              blend: str = 'uniform', fill_policy: str = 'coarse') -> Dict[str, Any]:
        field_path = require_file(field, 'field')
        manifest_path = require_file(str(Path(dataset) / 'manifest.json'), 'dataset manifest')
        self._record_input('field', field_path)
        self._record_input('manifest', manifest_path)
        manifest = load_manifest(dataset)
        if checkpoint:
            checkpoint_path = require_file(checkpoint, 'checkpoint')
            self._record_input('checkpoint', checkpoint_path)
            loaded = load_checkpoint(checkpoint_path)
            if loaded.manifest_hash and loaded.manifest_hash != manifest.manifest_hash():
                raise ManifestMismatchError("checkpoint was trained on a different dataset than --dataset")
            model = loaded.model
        else:
            logger.warning("⚠️ no checkpoint given, using the passthrough model")
            model = PassthroughModel()
        self.config = self.config.with_overrides({'patch': manifest.spec.model_dump(mode='json')})
        volume = read_volume(field_path)
        prediction, mask = reconstruct_full(volume, model, manifest.spec, manifest.stats, manifest,
                                            blend=blend, fill_policy=fill_policy)
        out_dir = Path(out)
        pred_path = write_volume(prediction, out_dir / PREDICTION_NAME)
        mask_path = write_volume(mask_field(mask, prediction), out_dir / COVERAGE_NAME)
        arguments = {'model': model.kind, 'blend': blend, 'fill_policy': fill_policy}
        return self._finish('infer', out_dir, arguments, {PREDICTION_NAME: pred_path, COVERAGE_NAME: mask_path},
                            {'prediction': str(pred_path), 'model': model.kind, 'coverage': mask.fraction})

    def baseline(self, field: str, out: str, kernel: str = 'trilinear', scale: Optional[str] = None,
                 dims: Optional[str] = None, subsample: int = 1) -> Dict[str, Any]:
        """
        Interpolate a field. With --subsample A the field is first decimated
        by A (every A-th point), the coarse input of a super-resolution run.
        """
        if (scale is None) == (dims is None):
            raise ConfigError("give exactly one of --scale or --dims")
        if subsample < 1:
            raise ConfigError(f"--subsample must be >= 1, got {subsample}")
        field_path = require_file(field, 'field')
        self._record_input('field', field_path)
        volume = read_volume(field_path)
        if subsample > 1:
            data = {c: volume.component(c)[::subsample, ::subsample, ::subsample] for c in volume.components}
            dims_sub = next(iter(data.values())).shape
            volume = VolumeField(dims_sub, volume.components, volume.domain, volume.time_tag, data)
        if dims is not None:
            target = parse_triple(dims, int, 'dims')
            result_field = lift_to_grid(volume, target, kernel)
        else:
            result_field = resample3d(volume, parse_triple(scale, float, 'scale'), kernel)
        out_dir = Path(out)
        path = write_volume(result_field, out_dir / BASELINE_NAME)
        arguments = {'kernel': kernel, 'scale': scale, 'dims': dims, 'subsample': subsample}
        return self._finish('baseline', out_dir, arguments, {BASELINE_NAME: path},
                            {'baseline': str(path), 'dims': list(result_field.dims), 'kernel': kernel})

    # ========================================================================
    # Evaluation
    # ========================================================================

    def evaluate(self, truth: str, coarse: str, out: str, predictions: Optional[Sequence[str]] = None,
                 plane: Optional[str] = None, component: Optional[str] = None,
                 panels: Optional[bool] = None) -> Dict[str, Any]:
        self.config = self.config.with_overrides({'report': {'plane': plane, 'component': component,
                                                             'panels': panels}})
        report_cfg = self.config.report
        paths = {'truth': require_file(truth, 'truth field'), 'coarse': require_file(coarse, 'coarse field')}
        for name, path in parse_predictions(predictions).items():
            paths[f'pred:{name}'] = require_file(path, f"prediction '{name}'")
        for label, path in paths.items():
            self._record_input(label, path)

        truth_field = read_volume(paths['truth'])
        coarse_field = read_volume(paths['coarse'])
        if coarse_field.dims != truth_field.dims:
            logger.info("coarse field %s lifted to %s", coarse_field.dims, truth_field.dims)
            coarse_field = lift_to_grid(coarse_field, truth_field.dims, 'trilinear')
        predicted = {label.split(':', 1)[1]: read_volume(path)
                     for label, path in paths.items() if label.startswith('pred:')}

        out_dir = Path(out)
        report = eval_report(coarse_field, truth_field, predicted, plane=report_cfg.plane, out_dir=out_dir,
                             component=report_cfg.component, panels=report_cfg.panels)
        outputs = {name: out_dir / name for name in ('velocity.csv', 'fft_amplitude.csv', 'report.json')}
        summary = {row.method: row.error.max_abs_error for row in report.velocity}
        return self._finish('eval', out_dir, {'plane': report.plane, 'component': report.component}, outputs,
                            {'plane': report.plane, 'methods': len(report.velocity), 'max_err': summary})

    # ========================================================================
    # Run registry
    # ========================================================================

    def history(self, limit: int = 10, command: Optional[str] = None) -> List[Dict[str, Any]]:
        runs = self.registry.recent_runs(limit=limit, command=command) if self.registry else []
        if self.output_format == 'json':
            print(json.dumps(runs, indent=2, sort_keys=True))
            return runs
        if not runs:
            print("No runs recorded")
            return runs
        print(f"📊 Last {len(runs)} runs:")
        for run in runs:
            marker = '✅' if run['status'] == 'ok' else ('❌' if run['status'] == 'failed' else '…')
            print(f"   {marker} {run['started_at']}  {run['command']:<10} exit={run['exit_code']}  "
                  f"{run['output_dir'] or ''}")
        return runs


def build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument('--config', help='Pipeline config JSON (default: $VOLSR_CONFIG or ~/.volsr/config.json)')
    base.add_argument('--threads', type=int, help='Worker threads for patch-level work')
    base.add_argument('--strict-deterministic', action='store_true', default=None,
                      help='Serial, canonically ordered reductions')
    base.add_argument('--output', choices=['human', 'json'], default='human', help='Output format')
    base.add_argument('--no-registry', action='store_true', help='Do not record the run')
    verbosity = base.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    verbosity.add_argument('--quiet', '-q', action='store_true', help='Warnings and errors only')

    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument('--dtype', dest='tensor_dtype', choices=['float32', 'float64'], help='Tensor dtype')

    parser = argparse.ArgumentParser(prog='volsr', description='Volumetric super-resolution pipeline')
    parser.add_argument('--version', action='version', version=f'volsr {__version__}')
    subparsers = parser.add_subparsers(dest='command', help='Commands')

    synth_parser = subparsers.add_parser('synth', parents=[common], help='Generate a synthetic velocity field')
    synth_parser.add_argument('--dims', required=True, help='Grid extents X,Y,Z')
    synth_parser.add_argument('--seed', type=int, help='Generator seed (default: seeds.data)')
    synth_parser.add_argument('--components', default='u,v,w', help='Components (default: u,v,w)')
    synth_parser.add_argument('--domain', help='Domain lengths (default: 8pi,2,3pi)')
    synth_parser.add_argument('--mean-velocity', type=float, default=0.0, help='Parabolic mean on u')
    synth_parser.add_argument('--num-modes', type=int, default=64, help='Fourier modes per component')
    synth_parser.add_argument('--time-tag', type=int, default=0, help='Snapshot index')
    synth_parser.add_argument('--out', required=True, help='Output directory')

    ingest_parser = subparsers.add_parser('ingest', parents=[base], help='Convert a raw dump to a container')
    ingest_parser.add_argument('--raw', required=True, help='Headerless little-endian raw file')
    ingest_parser.add_argument('--dims', required=True, help='Grid extents X,Y,Z')
    ingest_parser.add_argument('--dtype', dest='raw_dtype', choices=['f32', 'f64'], default='f32',
                               help='Raw sample type')
    ingest_parser.add_argument('--components', default='u', help='Components in file order')
    ingest_parser.add_argument('--domain', help='Domain lengths')
    ingest_parser.add_argument('--order', choices=['x-fastest', 'z-fastest'], default='x-fastest')
    ingest_parser.add_argument('--time-tag', type=int, default=0, help='Snapshot index')
    ingest_parser.add_argument('--out', required=True, help='Output directory')

    dataset_parser = subparsers.add_parser('dataset', parents=[common], help='Build an LR/HR patch dataset')
    dataset_parser.add_argument('--field', required=True, help='Source field container')
    dataset_parser.add_argument('--A', type=int, help='Coarsening factor')
    dataset_parser.add_argument('--s', type=int, help='Window stride')
    dataset_parser.add_argument('--component', choices=['u', 'v', 'w'], help='Velocity component')
    dataset_parser.add_argument('--upsample-method', choices=['trilinear', 'nearest'])
    dataset_parser.add_argument('--prefilter', action='store_true', default=None, help='Box filter before subsampling')
    dataset_parser.add_argument('--out', required=True, help='Dataset directory')

    for kind in ('vae', 'gan'):
        train_parser = subparsers.add_parser(f'train-{kind}', parents=[common], help=f'Train the {kind.upper()}')
        train_parser.add_argument('--dataset', required=True, help='Dataset directory')
        train_parser.add_argument('--epochs', type=int, help='Training epochs')
        train_parser.add_argument('--batch-size', type=int, help='Minibatch size')
        train_parser.add_argument('--lr', type=float, dest='learning_rate', help='Adam learning rate')
        train_parser.add_argument('--seed', type=int, help='Training seed (default: seeds.train)')
        train_parser.add_argument('--val-fraction', type=float, dest='validation_fraction',
                                  help='Share of pairs held out for val_loss')
        train_parser.add_argument('--out', required=True, help='Checkpoint directory')

    infer_parser = subparsers.add_parser('infer', parents=[common], help='Reconstruct a full field')
    infer_parser.add_argument('--checkpoint', help='Model checkpoint (omit for the passthrough model)')
    infer_parser.add_argument('--dataset', required=True, help='Training dataset directory (spec and stats)')
    infer_parser.add_argument('--field', required=True, help='Field on the target grid')
    infer_parser.add_argument('--blend', choices=['uniform', 'tapered'], default='uniform')
    infer_parser.add_argument('--fill-policy', choices=['coarse', 'zero', 'error'], default='coarse')
    infer_parser.add_argument('--out', required=True, help='Output directory')

    baseline_parser = subparsers.add_parser('baseline', parents=[common], help='Interpolation baseline')
    baseline_parser.add_argument('--field', required=True, help='Input field')
    baseline_parser.add_argument('--kernel', choices=list(BASELINE_KINDS), default='trilinear')
    baseline_parser.add_argument('--scale', help='Scale factor(s) F or FX,FY,FZ')
    baseline_parser.add_argument('--dims', help='Target extents X,Y,Z')
    baseline_parser.add_argument('--subsample', type=int, default=1, help='Decimate the input by A first')
    baseline_parser.add_argument('--out', required=True, help='Output directory')

    eval_parser = subparsers.add_parser('eval', parents=[common], help='Spatial and spectral comparison report')
    eval_parser.add_argument('--truth', required=True, help='Ground-truth field')
    eval_parser.add_argument('--coarse', required=True, help='Coarse field')
    eval_parser.add_argument('--pred', action='append', help='NAME=PATH prediction (repeatable)')
    eval_parser.add_argument('--plane', help="Plane, e.g. 'z=mid' or 'x=10'")
    eval_parser.add_argument('--component', choices=['u', 'v', 'w'])
    eval_parser.add_argument('--no-panels', dest='panels', action='store_false', default=None,
                             help='Skip PGM panels')
    eval_parser.add_argument('--out', required=True, help='Report directory')

    history_parser = subparsers.add_parser('history', parents=[common], help='Show recorded runs')
    history_parser.add_argument('--limit', type=int, default=10, help='Number of runs (default: 10)')
    history_parser.add_argument('--filter', dest='filter_command', help='Only this command')

    return parser


def _runtime_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        'threads': args.threads,
        'strict_deterministic': args.strict_deterministic,
        'dtype': getattr(args, 'tensor_dtype', None),
    }


def _dispatch(cli: VolsrCLI, args: argparse.Namespace) -> Any:
    command = args.command
    if command == 'synth':
        return cli.synth(args.dims, args.out, seed=args.seed, components=args.components, domain=args.domain,
                         mean_velocity=args.mean_velocity, num_modes=args.num_modes, time_tag=args.time_tag)
    if command == 'ingest':
        return cli.ingest(args.raw, args.dims, args.out, dtype=args.raw_dtype, components=args.components,
                          domain=args.domain, order=args.order, time_tag=args.time_tag)
    if command == 'dataset':
        return cli.dataset(args.field, args.out, A=args.A, s=args.s, component=args.component,
                           upsample_method=args.upsample_method, prefilter=args.prefilter)
    if command in ('train-vae', 'train-gan'):
        return cli.train(command.split('-', 1)[1], args.dataset, args.out, epochs=args.epochs,
                         batch_size=args.batch_size, learning_rate=args.learning_rate, seed=args.seed,
                         validation_fraction=args.validation_fraction)
    if command == 'infer':
        return cli.infer(args.field, args.dataset, args.out, checkpoint=args.checkpoint,
                         blend=args.blend, fill_policy=args.fill_policy)
    if command == 'baseline':
        return cli.baseline(args.field, args.out, kernel=args.kernel, scale=args.scale, dims=args.dims,
                            subsample=args.subsample)
    if command == 'eval':
        return cli.evaluate(args.truth, args.coarse, args.out, predictions=args.pred, plane=args.plane,
                            component=args.component, panels=args.panels)
    if command == 'history':
        return cli.history(limit=args.limit, command=args.filter_command)
    raise ConfigError(f"unknown command {command!r}")


def report_error(error: Exception) -> None:
    """One machine-parsable line on stderr"""
    code, exit_code = (error.code, error.exit_code) if isinstance(error, VolsrError) else ('internal', 1)
    message = ' '.join(str(error).split()) or type(error).__name__
    print(f"volsr-error code={code} exit={exit_code} message={message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.INFO
    if getattr(args, 'verbose', False):
        level = logging.DEBUG
    elif getattr(args, 'quiet', False):
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    logging.getLogger().setLevel(level)

    if not args.command:
        parser.print_help()
        return 1

    registry = None
    run_id = None
    exit_code = 0
    error_code = None
    cli = None
    try:
        manager = VolsrConfigManager(args.config)
        config = manager.config.with_overrides({'runtime': _runtime_overrides(args)})
        if not args.no_registry:
            registry = RunRegistryService(manager.get_database_url())
            out_dir = getattr(args, 'out', None)
            run_id = registry.start_run(args.command, output_dir=out_dir,
                                        config=config.model_dump(mode='json'))
        cli = VolsrCLI(config, output_format=args.output, registry=registry)
        rt = config.runtime
        with runtime.using(dtype=rt.dtype, strict=rt.strict_deterministic, threads=rt.threads):
            _dispatch(cli, args)
    except VolsrError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        report_error(e)
        exit_code, error_code = e.exit_code, e.code
    except KeyboardInterrupt:
        logger.info("\n🛑 Interrupted by user")
        exit_code = 130
    except Exception as e:
        logger.error(f"Error: {e}", exc_info=True)
        report_error(e)
        exit_code, error_code = 1, 'internal'
    finally:
        if registry is not None:
            registry.finish_run(run_id, exit_code, error_code, inputs=cli.inputs if cli else None)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
