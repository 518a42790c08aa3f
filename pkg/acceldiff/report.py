"""Run directory files: CSV tables, the manifest, and the consolidated summary."""

import csv
import gzip
import io
import logging
import os
from collections import namedtuple

import numpy as np

from acceldiff.errors import ReportError


logger = logging.getLogger(__name__)

MANIFEST = 'manifest.txt'
CHECKS = 'checks.csv'
SUMMARY = 'summary.txt'

REQUIRED = ('experiment', 'config_hash', 'master_seed', 'status')

Check = namedtuple('Check', 'invariant value threshold passed hard')


def cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return '%.17g' % value
    if value is None:
        return ''
    return str(value)


def write_csv(path, header, rows, compress=False):
    """Write a header row then ``rows``; floats keep full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    count = 0
    for row in rows:
        writer.writerow([cell(v) for v in row])
        count += 1
    data = buffer.getvalue().encode('utf-8')
    if compress:
        # mtime=0 keeps the archive bytes reproducible
        with open(path, 'wb') as raw:
            with gzip.GzipFile(fileobj=raw, mode='wb', mtime=0, filename='') as fd:
                fd.write(data)
    else:
        with open(path, 'wb') as fd:
            fd.write(data)
    logger.debug('wrote %s (%d rows)', path, count)
    return count


def read_csv(path):
    with open(path) as fd:
        return list(csv.DictReader(fd))


def write_manifest(path, entries):
    with open(path, 'w') as fd:
        for key, value in entries:
            fd.write('%s = %s\n' % (key, cell(value)))


def read_manifest(run_dir):
    path = os.path.join(run_dir, MANIFEST)
    if not os.path.exists(path):
        raise ReportError('no manifest in %s' % run_dir)
    manifest = {}
    with open(path) as fd:
        for number, line in enumerate(fd, 1):
            line = line.strip()
            if not line:
                continue
            key, sep, value = line.partition(' = ')
            if not sep or not key:
                raise ReportError('corrupt manifest %s: line %d is not "key = value"'
                                  % (path, number))
            manifest[key] = value
    missing = [k for k in REQUIRED if k not in manifest]
    if missing:
        raise ReportError('corrupt manifest %s: missing %s' % (path, ', '.join(missing)))
    return manifest


def _float(text):
    return float(text) if text not in ('', None) else float('nan')


def _fit_lines(rows):
    lines = ['', 'Rate fits']
    for r in rows:
        lines.append('  %-22s %-12s rate=%.6g [%.6g, %.6g]  R2=%.4f  window=[%s, %s] n=%s' % (
            r['process'], r['model'], _float(r['rate']), _float(r['ci_low']),
            _float(r['ci_high']), _float(r['r2']), r['t_start'], r['t_end'], r['n_points']))
    return lines


def _hitting_lines(rows):
    lines = ['', 'Hitting-time moments against q! C^q',
             '  %10s %3s %14s %12s %14s' % ('x0', 'q', 'estimate', 'se', 'q! C^q')]
    for r in rows:
        lines.append('  %10s %3s %14.6g %12.3g %14.6g' % (
            r['x0'], r['q'], _float(r['estimate']), _float(r['se']), _float(r['bound'])))
    return lines


def report(run_dir):
    """Write summary.txt for a finished run and return its text."""
    manifest = read_manifest(run_dir)
    lines = ['%s run %s' % (manifest['experiment'], manifest['config_hash'][:12]),
             '  status       %s' % manifest['status'],
             '  master seed  %s' % manifest['master_seed']]
    for key in ('density', 'processes', 'wall_clock_seconds'):
        if key in manifest:
            lines.append('  %-12s %s' % (key.replace('_seconds', ''), manifest[key]))

    fits = os.path.join(run_dir, 'fits.csv')
    if os.path.exists(fits):
        lines.extend(_fit_lines(read_csv(fits)))
    hitting = os.path.join(run_dir, 'hitting.csv')
    if os.path.exists(hitting):
        lines.extend(_hitting_lines(read_csv(hitting)))

    checks = os.path.join(run_dir, CHECKS)
    rows = read_csv(checks) if os.path.exists(checks) else []
    envelope = [r for r in rows if r['invariant'].startswith('tv_below_envelope')]
    for r in envelope:
        lines.append('')
        lines.append('Envelope 2 exp(-alpha t)/(1 - alpha C): max TV - bound past burn-in = %s (%s)'
                     % (r['value'], 'PASS' if r['passed'] == 'true' else 'FAIL'))
    lines.extend(['', 'Invariants', '  %-40s %-24s %-24s %s' % ('name', 'value', 'threshold', '')])
    for r in rows:
        lines.append('  %-40s %-24s %-24s %s%s' % (
            r['invariant'], r['value'], r['threshold'],
            'PASS' if r['passed'] == 'true' else 'FAIL', '' if r['hard'] == 'true' else ' (statistical)'))
    failed = sum(1 for r in rows if r['passed'] != 'true')
    lines.append('')
    lines.append('%d of %d checks passed' % (len(rows) - failed, len(rows)))
    text = '\n'.join(lines) + '\n'
    with open(os.path.join(run_dir, SUMMARY), 'w') as fd:
        fd.write(text)
    return text
