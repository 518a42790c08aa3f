import gzip
import json
import os

import pytest

import acceldiff.cli
from acceldiff.cli import main
from acceldiff.config import OUTPUT_DIR_ENV
from acceldiff.errors import InvariantViolation, ReportError
from acceldiff.plot import line_plot
from acceldiff.report import read_csv, read_manifest, report, write_csv


PARETO = {'model': 'pareto_shifted', 'm': 5}


@pytest.fixture(autouse=True)
def no_env_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


def write_config(tmpdir, name='run.json', **fields):
    data = {'density': dict(PARETO), 'threads': 1}
    data.update(fields)
    path = tmpdir.join(name)
    path.write(json.dumps(data))
    return str(path)


def test_package_metadata(tmpdir):
    assert acceldiff.__author__ == 'The acceldiff developers'
    out = str(tmpdir.join('meta'))
    assert main(['-q', 'run', write_config(tmpdir, experiment='bvp', q_max=1), '--out', out]) == 0
    manifest = read_manifest(out)
    assert manifest['tool'] == 'acceldiff'
    assert manifest['version'] == acceldiff.__version__


def test_validate(tmpdir, capsys):
    assert main(['validate', write_config(tmpdir, experiment='bvp')]) == 0
    assert 'valid bvp experiment' in capsys.readouterr().out


def test_identities_run(tmpdir):
    out = str(tmpdir.join('identities'))
    assert main(['-q', 'run', write_config(tmpdir, experiment='identities'), '--out', out]) == 0
    manifest = read_manifest(out)
    assert manifest['status'] == 'ok'
    assert manifest['experiment'] == 'identities'
    assert len(manifest['config_hash']) == 64
    for name in ('identities.csv', 'checks.csv', 'config.json', 'summary.txt'):
        assert os.path.exists(os.path.join(out, name))
    checks = dict((r['invariant'], r) for r in read_csv(os.path.join(out, 'checks.csv')))
    assert checks['key_identity']['passed'] == 'true'
    for label in ('langevin', 'accelerated_time_change', 'accelerated_reversible', 'bibby'):
        assert checks['stationarity_' + label]['passed'] == 'true'
        assert checks['zero_flux_' + label]['passed'] == 'true'
    rows = dict((r['quantity'], r) for r in read_csv(os.path.join(out, 'identities.csv')))
    assert float(rows['time_changed_flux_against_pi']['value']) == pytest.approx(0.5, rel=1e-3)
    text = report(out)
    assert 'Invariants' in text
    assert 'checks passed' in text


def test_bvp_run_is_reproducible(tmpdir):
    config = write_config(tmpdir, experiment='bvp', q_max=2, x0_list=[1.0, 10.0],
                          checkpoints=[0.0, 1.0, 2.0])
    outputs = []
    for name in ('a', 'b'):
        out = str(tmpdir.join(name))
        assert main(['-q', 'run', config, '--out', out]) == 0
        outputs.append(out)
    for name in ('ladder.csv', 'ladder_bounds.csv', 'exp_moment_bound.csv', 'tv_bound.csv'):
        first, second = (open(os.path.join(o, name), 'rb').read() for o in outputs)
        assert first == second
    rows = read_csv(os.path.join(outputs[0], 'ladder_bounds.csv'))
    assert [r['q'] for r in rows] == ['1', '2']


def test_tv_curve_independent_of_threads(tmpdir):
    config = write_config(tmpdir, experiment='tv', ensemble_size=1000, x0=1.0,
                          checkpoints=[0.25, 0.5], bootstrap=20, chunk_size=250,
                          processes=[{'kind': 'langevin', 'step': {'mode': 'uniform', 'h': 0.01}}])
    tables = []
    for threads in ('1', '3'):
        out = str(tmpdir.join('tv' + threads))
        assert main(['-q', 'run', config, '--out', out, '--threads', threads]) == 0
        with open(os.path.join(out, 'tv_curve.csv'), 'rb') as fd:
            tables.append(fd.read())
    assert tables[0] == tables[1]


def test_tv_run_reports_boundary(tmpdir):
    out = str(tmpdir.join('tv'))
    config = write_config(tmpdir, experiment='tv', ensemble_size=1000, x0=0.0,
                          checkpoints=[0.25, 0.5], bootstrap=20,
                          processes=[{'kind': 'langevin', 'step': {'mode': 'uniform', 'h': 0.01}},
                                     {'kind': 'bibby', 'step': {'mode': 'uniform', 'h': 0.01}}])
    assert main(['-q', 'run', config, '--out', out]) == 0
    rows = dict((r['process'], r) for r in read_csv(os.path.join(out, 'boundary.csv')))
    assert sorted(rows) == ['bibby', 'langevin']
    assert rows['langevin']['paths'] == '1000'
    assert float(rows['langevin']['local_time']) > 0.0
    assert int(rows['bibby']['clamps']) >= 0
    manifest = read_manifest(out)
    assert 'clamps=' in manifest['diagnostics_bibby']
    assert 'local_time=' in manifest['diagnostics_langevin']
    checks = dict((r['invariant'], r) for r in read_csv(os.path.join(out, 'checks.csv')))
    assert 'two_sample_tv_langevin' in checks and 'two_sample_tv_bibby' in checks
    assert not any(name.startswith('non_sticky') for name in checks)


def test_invalid_config_leaves_nothing(tmpdir):
    out = str(tmpdir.join('bad'))
    config = write_config(tmpdir, experiment='bvp', density={'model': 'pareto_shifted', 'm': 2.5})
    assert main(['-q', 'run', config, '--out', out]) == 1
    assert not os.path.exists(out)
    assert main(['validate', config]) == 1


def test_invariant_violation_keeps_outputs(tmpdir, monkeypatch):
    def violated(ladder, tol=1e-8):
        raise InvariantViolation('ladder_bound', 'forced')

    monkeypatch.setattr(acceldiff.cli, 'check_ladder', violated)
    out = str(tmpdir.join('violated'))
    config = write_config(tmpdir, experiment='bvp', q_max=1, x0_list=[1.0])
    assert main(['-q', 'run', config, '--out', out]) == 2
    assert read_manifest(out)['status'] == 'invariant_violation'
    assert os.path.exists(os.path.join(out, 'ladder.csv'))
    checks = read_csv(os.path.join(out, 'checks.csv'))
    assert any(r['invariant'] == 'ladder_bound' and r['passed'] == 'false' for r in checks)


def test_output_dir_from_environment(tmpdir, monkeypatch):
    out = str(tmpdir.join('from_env'))
    monkeypatch.setenv(OUTPUT_DIR_ENV, out)
    config = write_config(tmpdir, experiment='bvp', q_max=1, output_dir=str(tmpdir.join('unused')))
    assert main(['-q', 'run', config]) == 0
    assert read_manifest(out)['experiment'] == 'bvp'
    assert not os.path.exists(str(tmpdir.join('unused')))


def test_report_needs_manifest(tmpdir):
    assert main(['report', str(tmpdir)]) == 1
    tmpdir.join('manifest.txt').write('experiment bvp\n')
    with pytest.raises(ReportError):
        read_manifest(str(tmpdir))


def test_compressed_csv_is_reproducible(tmpdir):
    paths = [str(tmpdir.join(name)) for name in ('a.csv.gz', 'b.csv.gz')]
    for path in paths:
        assert write_csv(path, ('t', 'x'), [(0.5, 1.0), (1.0, True)], compress=True) == 2
    assert open(paths[0], 'rb').read() == open(paths[1], 'rb').read()
    with gzip.open(paths[0], 'rt') as fd:
        assert fd.read() == 't,x\n0.5,1\n1,true\n'


def test_line_plot(tmpdir):
    path = str(tmpdir.join('plot.svg'))
    line_plot(path, [('decay', [0.0, 1.0, 2.0], [1.0, 0.1, 0.0])], title='a < b')
    text = open(path).read()
    assert text.count('<polyline') == 1
    assert 'a &lt; b' in text
    empty = str(tmpdir.join('empty.svg'))
    line_plot(empty, [('zero', [0.0, 1.0], [0.0, 0.0])])
    assert not os.path.exists(empty)
