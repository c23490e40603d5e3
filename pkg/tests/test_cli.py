"""
Tests for the Volsr CLI
=======================

Drives `volsr_cli.main` end to end on small fields: every command's output
directory, provenance, resolved config, error lines and exit codes.
"""

import json
import math

import numpy as np
import pytest

import volsr_cli
from volsr.errors import ConfigError
from volsr.io import read_volume
from volsr.networks import load_checkpoint

SMALL_VAE = {
    'vae': {
        'latent_dim': 2,
        'encoder_channels': [2, 2, 2, 2],
        'dense_hidden': 4,
        'decoder_channels': [2, 2, 2, 2],
    },
    'runtime': {'dtype': 'float64'},
}


def run(*argv):
    return volsr_cli.main([str(a) for a in argv])


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.json'
    path.write_text(json.dumps(SMALL_VAE), encoding='utf-8')
    return path


@pytest.fixture
def pipeline(tmp_path, small_config):
    """synth -> dataset -> train-vae on a 24^3 field; returns the run directories"""
    dirs = {name: tmp_path / name for name in ('train', 'test', 'data', 'model')}
    assert run('synth', '--dims', '24', '--seed', 1, '--components', 'u', '--num-modes', 16,
               '--out', dirs['train']) == 0
    assert run('synth', '--dims', '24', '--seed', 2, '--components', 'u', '--num-modes', 16,
               '--out', dirs['test']) == 0
    assert run('dataset', '--field', dirs['train'] / 'field.volsr', '--A', 2, '--s', 8,
               '--out', dirs['data']) == 0
    assert run('train-vae', '--config', small_config, '--dataset', dirs['data'], '--epochs', 1,
               '--batch-size', 4, '--out', dirs['model']) == 0
    return dirs


# =============================================================================
# Argument helpers
# =============================================================================

class TestParsers:

    def test_parse_triple(self):
        assert volsr_cli.parse_triple('64,32,16') == (64, 32, 16)
        assert volsr_cli.parse_triple('8') == (8, 8, 8)
        assert volsr_cli.parse_triple('1.5', float) == (1.5, 1.5, 1.5)
        for bad in ('1,2', 'a,b,c'):
            with pytest.raises(ConfigError):
                volsr_cli.parse_triple(bad)

    @pytest.mark.parametrize("text,value", [
        ('2', 2.0), ('pi', math.pi), ('8pi', 8 * math.pi), ('3*pi', 3 * math.pi), ('0.5', 0.5),
    ])
    def test_parse_length(self, text, value):
        assert volsr_cli.parse_length(text) == pytest.approx(value)

    def test_parse_domain(self):
        assert volsr_cli.parse_domain('8pi,2,3pi') == pytest.approx((8 * math.pi, 2.0, 3 * math.pi))
        with pytest.raises(ConfigError):
            volsr_cli.parse_domain('1,2')
        with pytest.raises(ConfigError):
            volsr_cli.parse_domain('1,0,2')

    def test_parse_predictions(self):
        assert volsr_cli.parse_predictions(['vae=a.volsr', 'cubic=b.volsr']) == {
            'vae': 'a.volsr', 'cubic': 'b.volsr'}
        assert volsr_cli.parse_predictions(None) == {}
        for bad in (['vae'], ['=x'], ['a=x', 'a=y']):
            with pytest.raises(ConfigError):
                volsr_cli.parse_predictions(bad)


# =============================================================================
# Pipeline
# =============================================================================

class TestPipeline:

    def test_synth_outputs(self, tmp_path):
        assert run('synth', '--dims', '16,12,10', '--seed', 3, '--out', tmp_path / 'a') == 0
        volume = read_volume(tmp_path / 'a' / 'field.volsr')
        assert volume.dims == (16, 12, 10)
        assert volume.components == ('u', 'v', 'w')
        assert volume.dtype == np.float32

        provenance = json.loads((tmp_path / 'a' / 'provenance.json').read_text())
        assert set(provenance) == {'command', 'volsr_version', 'arguments', 'inputs', 'outputs'}
        assert provenance['command'] == 'synth'
        assert provenance['arguments']['seed'] == 3
        assert set(provenance['outputs']) == {'field.volsr'}

        resolved = json.loads((tmp_path / 'a' / 'config.resolved.json').read_text())
        assert resolved['seeds']['data'] == 3

    def test_synth_is_reproducible(self, tmp_path):
        for name in ('a', 'b'):
            assert run('synth', '--dims', '12', '--seed', 5, '--dtype', 'float64', '--out', tmp_path / name) == 0
        for artifact in ('field.volsr', 'provenance.json', 'config.resolved.json'):
            assert (tmp_path / 'a' / artifact).read_bytes() == (tmp_path / 'b' / artifact).read_bytes()

    def test_dataset_and_training(self, pipeline):
        manifest = json.loads((pipeline['data'] / 'manifest.json').read_text())
        assert manifest['count'] == 8
        assert manifest['spec']['q'] == 16
        for name in ('lr.volsr', 'hr.volsr', 'provenance.json'):
            assert (pipeline['data'] / name).exists()

        history = json.loads((pipeline['model'] / 'history.json').read_text())
        assert history['kind'] == 'vae'
        assert len(history['history']) == 1
        assert math.isfinite(history['history'][0]['total'])

        checkpoint = load_checkpoint(pipeline['model'] / 'checkpoint.ckpt', expected_kind='vae')
        assert checkpoint.model.config.latent_dim == 2
        provenance = json.loads((pipeline['model'] / 'provenance.json').read_text())
        assert set(provenance['inputs']) == {'manifest'}
        assert set(provenance['outputs']) == {'checkpoint.ckpt', 'history.json'}

    def test_validation_loss_reported(self, pipeline, small_config, tmp_path, capsys):
        capsys.readouterr()
        assert run('train-vae', '--config', small_config, '--dataset', pipeline['data'], '--epochs', 2,
                   '--batch-size', 3, '--val-fraction', 0.25, '--output', 'json', '--out', tmp_path / 'm') == 0
        result = json.loads(capsys.readouterr().out)
        assert math.isfinite(result['final']['val_loss'])
        history = json.loads((tmp_path / 'm' / 'history.json').read_text())['history']
        assert history[-1]['val_loss'] == result['final']['val_loss']
        provenance = json.loads((tmp_path / 'm' / 'provenance.json').read_text())
        assert provenance['arguments']['training']['validation_fraction'] == 0.25

    def test_infer_baseline_eval(self, pipeline, tmp_path):
        field = pipeline['test'] / 'field.volsr'
        assert run('infer', '--checkpoint', pipeline['model'] / 'checkpoint.ckpt', '--dataset', pipeline['data'],
                   '--field', field, '--out', tmp_path / 'infer') == 0
        prediction = read_volume(tmp_path / 'infer' / 'prediction.volsr')
        coverage = read_volume(tmp_path / 'infer' / 'coverage.volsr')
        assert prediction.dims == (24, 24, 24)
        assert prediction.components == ('u',)
        assert np.all(coverage.component('mask') == 1.0)

        assert run('baseline', '--field', field, '--subsample', 2, '--dims', '24,24,24', '--kernel', 'nearest',
                   '--out', tmp_path / 'nearest') == 0
        assert run('baseline', '--field', field, '--subsample', 2, '--dims', '24,24,24',
                   '--kernel', 'cubic_catmull_rom', '--out', tmp_path / 'cubic') == 0
        assert read_volume(tmp_path / 'nearest' / 'baseline.volsr').dims == (24, 24, 24)

        assert run('eval', '--truth', field, '--coarse', tmp_path / 'nearest' / 'baseline.volsr',
                   '--pred', f"vae={tmp_path / 'infer' / 'prediction.volsr'}",
                   '--pred', f"cubic={tmp_path / 'cubic' / 'baseline.volsr'}",
                   '--plane', 'z=mid', '--out', tmp_path / 'report') == 0
        report = json.loads((tmp_path / 'report' / 'report.json').read_text())
        assert set(report['methods']) == {'truth', 'coarse', 'vae', 'cubic'}
        assert (tmp_path / 'report' / 'velocity.csv').exists()
        assert (tmp_path / 'report' / 'vae_amplitude.pgm').exists()
        provenance = json.loads((tmp_path / 'report' / 'provenance.json').read_text())
        assert set(provenance['inputs']) == {'truth', 'coarse', 'pred:vae', 'pred:cubic'}

    def test_passthrough_infer_reproduces_field(self, tmp_path):
        assert run('synth', '--dims', '32', '--seed', 4, '--components', 'v', '--dtype', 'float64',
                   '--out', tmp_path / 'f') == 0
        field = tmp_path / 'f' / 'field.volsr'
        assert run('dataset', '--field', field, '--A', 1, '--s', 16, '--component', 'v',
                   '--out', tmp_path / 'd') == 0
        assert run('infer', '--dataset', tmp_path / 'd', '--field', field, '--out', tmp_path / 'i') == 0
        np.testing.assert_allclose(read_volume(tmp_path / 'i' / 'prediction.volsr').component('v'),
                                   read_volume(field).component('v'), atol=1e-12)

    def test_json_output(self, tmp_path, capsys):
        capsys.readouterr()
        assert run('synth', '--dims', '8', '--output', 'json', '--out', tmp_path / 's') == 0
        result = json.loads(capsys.readouterr().out)
        assert result['command'] == 'synth'
        assert result['dims'] == [8, 8, 8]
        assert len(result['hash']) == 64


# =============================================================================
# Errors and exit codes
# =============================================================================

class TestErrors:

    def _error_line(self, capsys):
        lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith('volsr-error ')]
        assert len(lines) == 1
        return lines[0]

    def test_no_command(self):
        assert run() == 1

    def test_missing_field(self, tmp_path, capsys):
        capsys.readouterr()
        assert run('dataset', '--field', tmp_path / 'nope.volsr', '--out', tmp_path / 'd') == 2
        line = self._error_line(capsys)
        assert line.startswith('volsr-error code=config exit=2 message=')
        assert 'nope.volsr' in line

    def test_bad_container(self, tmp_path, capsys):
        bogus = tmp_path / 'bogus.volsr'
        bogus.write_bytes(b'NOTAVOLSRFILE' * 8)
        capsys.readouterr()
        assert run('dataset', '--field', bogus, '--out', tmp_path / 'd') == 3
        assert self._error_line(capsys).startswith('volsr-error code=format')

    def test_corrupt_component_label(self, tmp_path, capsys):
        assert run('synth', '--dims', '8', '--components', 'u', '--out', tmp_path / 'f') == 0
        path = tmp_path / 'f' / 'field.volsr'
        blob = bytearray(path.read_bytes())
        blob[69] = 0xFF
        path.write_bytes(bytes(blob))
        capsys.readouterr()
        assert run('dataset', '--field', path, '--out', tmp_path / 'd') == 3
        assert self._error_line(capsys).startswith('volsr-error code=format exit=3 message=')

    def test_unexpected_exception(self, tmp_path, capsys, monkeypatch):
        def broken(*args, **kwargs):
            raise RuntimeError('generator\nexploded')

        monkeypatch.setattr(volsr_cli, 'synth_field', broken)
        capsys.readouterr()
        assert run('synth', '--dims', '8', '--out', tmp_path / 'f') == 1
        assert self._error_line(capsys) == 'volsr-error code=internal exit=1 message=generator exploded'

    def test_invalid_geometry(self, tmp_path):
        assert run('synth', '--dims', '24', '--components', 'u', '--out', tmp_path / 'f') == 0
        assert run('dataset', '--field', tmp_path / 'f' / 'field.volsr', '--A', 3, '--s', 4,
                   '--out', tmp_path / 'd') == 2

    def test_model_size_must_match_dataset(self, tmp_path):
        config = tmp_path / 'c.json'
        config.write_text(json.dumps({'vae': {'input_size': 8}}), encoding='utf-8')
        assert run('synth', '--dims', '16', '--components', 'u', '--out', tmp_path / 'f') == 0
        assert run('dataset', '--field', tmp_path / 'f' / 'field.volsr', '--A', 1, '--s', 16,
                   '--out', tmp_path / 'd') == 0
        assert run('train-vae', '--config', config, '--dataset', tmp_path / 'd', '--out', tmp_path / 'm') == 2

    def test_checkpoint_from_other_dataset(self, pipeline, tmp_path, capsys):
        other = tmp_path / 'other'
        assert run('dataset', '--field', pipeline['train'] / 'field.volsr', '--A', 4, '--s', 4,
                   '--out', other) == 0
        capsys.readouterr()
        assert run('infer', '--checkpoint', pipeline['model'] / 'checkpoint.ckpt', '--dataset', other,
                   '--field', pipeline['test'] / 'field.volsr', '--out', tmp_path / 'i') == 5
        assert self._error_line(capsys).startswith('volsr-error code=manifest exit=5')

    def test_baseline_needs_one_target(self, tmp_path):
        assert run('synth', '--dims', '8', '--out', tmp_path / 'f') == 0
        field = tmp_path / 'f' / 'field.volsr'
        assert run('baseline', '--field', field, '--out', tmp_path / 'b') == 2
        assert run('baseline', '--field', field, '--scale', 2, '--dims', '16,16,16', '--out', tmp_path / 'b') == 2


# =============================================================================
# Run registry
# =============================================================================

class TestHistory:

    def test_runs_are_recorded(self, tmp_path, capsys):
        assert run('synth', '--dims', '8', '--out', tmp_path / 'ok') == 0
        assert run('dataset', '--field', tmp_path / 'missing.volsr', '--out', tmp_path / 'd') == 2
        capsys.readouterr()
        assert run('history', '--output', 'json') == 0
        runs = json.loads(capsys.readouterr().out)
        by_command = {r['command']: r for r in runs}
        assert by_command['synth']['status'] == 'ok'
        assert 'field.volsr' not in by_command['synth']['inputs']
        assert (by_command['dataset']['status'], by_command['dataset']['error_code']) == ('failed', 'config')

    def test_no_registry(self, tmp_path, capsys):
        assert run('synth', '--dims', '8', '--no-registry', '--out', tmp_path / 's') == 0
        capsys.readouterr()
        assert run('history', '--output', 'json') == 0
        runs = json.loads(capsys.readouterr().out)
        assert [r['command'] for r in runs] == ['history']
