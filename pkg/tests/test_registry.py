"""
Tests for the Run Registry
==========================

RunRegistryService against a throwaway sqlite database.
"""

import pytest

from app.run_registry import RunRegistryService
from volsr.database import dispose_engines


@pytest.fixture
def registry(tmp_path):
    service = RunRegistryService(f"sqlite:///{tmp_path / 'runs.sqlite'}")
    yield service
    dispose_engines()


class TestRunRegistry:

    def test_connected(self, registry):
        assert registry.connected
        assert registry.run_count() == 0
        assert registry.recent_runs() == []

    def test_start_and_finish(self, registry):
        run_id = registry.start_run('synth', output_dir='out', config={'seed': 1}, inputs={'a': 'h1'})
        assert run_id is not None

        run = registry.recent_runs()[0]
        assert run['status'] == 'running'
        assert run['exit_code'] is None
        assert run['inputs'] == {'a': 'h1'}

        assert registry.finish_run(run_id, 0, inputs={'field.volsr': 'h2'})
        run = registry.recent_runs()[0]
        assert (run['status'], run['exit_code'], run['error_code']) == ('ok', 0, None)
        assert run['inputs'] == {'field.volsr': 'h2'}
        assert run['finished_at'] is not None

    def test_failed_run(self, registry):
        run_id = registry.start_run('train-vae')
        assert registry.finish_run(run_id, 4, error_code='numeric')
        run = registry.recent_runs(command='train-vae')[0]
        assert (run['status'], run['exit_code'], run['error_code']) == ('failed', 4, 'numeric')

    def test_count_and_filter(self, registry):
        for command in ('synth', 'dataset', 'synth'):
            registry.finish_run(registry.start_run(command), 0)
        assert registry.run_count() == 3
        assert registry.run_count('synth') == 2
        assert [r['command'] for r in registry.recent_runs(command='dataset')] == ['dataset']
        assert len(registry.recent_runs(limit=2)) == 2

    def test_unknown_run(self, registry):
        assert not registry.finish_run('no-such-id', 0)
        assert not registry.finish_run(None, 0)


def test_unavailable_registry_is_silent(tmp_path):
    service = RunRegistryService('notadialect://nowhere')
    assert not service.connected
    assert service.start_run('synth') is None
    assert not service.finish_run('x', 0)
    assert service.recent_runs() == []
    assert service.run_count() == 0
