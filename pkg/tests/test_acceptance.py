"""
Acceptance Runs
===============

Full-size training and reconstruction on synthetic channel fields. These
take minutes to hours on a CPU and are deselected by default; run them with
`pytest -m slow`.
"""

import math

import numpy as np
import pytest

from volsr.core import runtime
from volsr.interp import lift_to_grid
from volsr.io import VolumeField, synth_field
from volsr.networks import GanConfig, TrainingConfig, VaeConfig, train_gan, train_vae
from volsr.patches import PatchSpec, build_dataset, compute_norm_stats
from volsr.spectral import eval_report, field_error
from volsr.stitch import reconstruct_full

pytestmark = pytest.mark.slow

SPEC = PatchSpec(A=2, s=8)


@pytest.fixture(scope='module')
def training_field():
    return synth_field((72, 72, 72), seed=11, components=('u',))


@pytest.fixture(scope='module')
def dataset(training_field):
    stats = compute_norm_stats(training_field, 'u')
    pairs = build_dataset(training_field, SPEC, stats)
    assert len(pairs) == 512
    return pairs, stats


@pytest.fixture(scope='module')
def trained_vae(dataset):
    pairs, _ = dataset
    with runtime.using(dtype='float32'):
        return train_vae(pairs, VaeConfig(seed=1), TrainingConfig(epochs=50, batch_size=32, seed=1))


class TestVaeTraining:

    def test_loss_halves(self, trained_vae):
        _, history = trained_vae
        assert len(history) == 50
        assert history[-1]['total'] < 0.5 * history[0]['total']

    def test_bit_reproducible(self, dataset):
        pairs, _ = dataset
        runs = []
        for _ in range(2):
            with runtime.using(dtype='float32', strict=True, threads=1):
                model, history = train_vae(pairs[:64], VaeConfig(seed=2), TrainingConfig(epochs=2, batch_size=16, seed=3))
            runs.append((model, history))
        assert runs[0][1] == runs[1][1]
        for a, b in zip(runs[0][0].parameters(), runs[1][0].parameters()):
            np.testing.assert_array_equal(a.data, b.data)


class TestSuperResolution:

    def test_vae_beats_nearest(self, trained_vae, dataset):
        model, _ = trained_vae
        _, stats = dataset
        held_out = synth_field((72, 72, 72), seed=12, components=('u',))
        prediction, mask = reconstruct_full(held_out, model, SPEC, stats)
        assert mask.fraction == 1.0

        coarse = held_out.select(['u'])
        sub = coarse.component('u')[::SPEC.A, ::SPEC.A, ::SPEC.A]
        nearest = lift_to_grid(VolumeField(sub.shape, ('u',), coarse.domain, 0, {'u': sub}), held_out.dims, 'nearest')

        truth = held_out.component('u')
        vae_error = field_error(prediction.component('u'), truth)
        nearest_error = field_error(nearest.component('u'), truth)
        assert vae_error.mean_abs_error < nearest_error.mean_abs_error

        report = eval_report(nearest, held_out, {'vae': prediction})
        by_method = {row.method: row.error for row in report.velocity}
        assert by_method['vae'].mean_abs_error < by_method['coarse'].mean_abs_error


class TestGanTraining:

    def test_clipping_and_finite_losses(self, dataset):
        pairs, _ = dataset
        with runtime.using(dtype='float32'):
            model, history = train_gan(pairs, GanConfig(seed=1), TrainingConfig(epochs=5, batch_size=32, seed=1))
        assert len(history) == 5
        for record in history:
            assert all(math.isfinite(value) for value in record.values())
        for param in model.critic.parameters():
            assert np.abs(param.data).max() <= 0.01
