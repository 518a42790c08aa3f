"""Minimal SVG line plots of TV curves; the CSV files stay authoritative."""

import logging
from xml.sax.saxutils import escape

import numpy as np


logger = logging.getLogger(__name__)

COLORS = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf')

WIDTH, HEIGHT = 640, 400
MARGIN = 60


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) * (b - a) / span


def line_plot(path, series, title='', xlabel='t', ylabel='TV', log_y=True):
    """Write ``series`` (a list of (label, xs, ys)) as polylines to an SVG file.

    With ``log_y`` nonpositive values are dropped.
    """
    prepared = []
    for label, xs, ys in series:
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_y:
            keep &= ys > 0.0
            ys = np.where(keep, np.log10(np.where(keep, ys, 1.0)), 0.0)
        prepared.append((label, xs[keep], ys[keep]))
    points = [p for p in prepared if p[1].size]
    if not points:
        logger.warning('nothing to plot for %s', path)
        return
    x_all = np.concatenate([p[1] for p in points])
    y_all = np.concatenate([p[2] for p in points])
    sx = _scale(x_all.min(), x_all.max(), MARGIN, WIDTH - MARGIN)
    sy = _scale(y_all.min(), y_all.max(), HEIGHT - MARGIN, MARGIN)

    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">' % (WIDTH, HEIGHT),
           '<rect width="100%" height="100%" fill="white"/>',
           '<text x="%d" y="24" text-anchor="middle">%s</text>' % (WIDTH // 2, escape(title)),
           '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
           % (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN),
           '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="black"/>'
           % (MARGIN, MARGIN, MARGIN, HEIGHT - MARGIN),
           '<text x="%d" y="%d" text-anchor="middle">%s</text>'
           % (WIDTH // 2, HEIGHT - 15, escape(xlabel)),
           '<text x="15" y="%d" transform="rotate(-90 15 %d)" text-anchor="middle">%s</text>'
           % (HEIGHT // 2, HEIGHT // 2, escape(ylabel + (' (log10)' if log_y else '')))]
    for value in np.linspace(x_all.min(), x_all.max(), 5):
        out.append('<text x="%.1f" y="%d" font-size="10" text-anchor="middle">%.3g</text>'
                   % (sx(value), HEIGHT - MARGIN + 14, value))
    for value in np.linspace(y_all.min(), y_all.max(), 5):
        out.append('<text x="%d" y="%.1f" font-size="10" text-anchor="end">%.3g</text>'
                   % (MARGIN - 4, sy(value), value))
    for i, (label, xs, ys) in enumerate(points):
        color = COLORS[i % len(COLORS)]
        coords = ' '.join('%.2f,%.2f' % (sx(x), sy(y)) for x, y in zip(xs, ys))
        out.append('<polyline fill="none" stroke="%s" stroke-width="1.5" points="%s"/>'
                   % (color, coords))
        out.append('<text x="%d" y="%d" font-size="11" fill="%s">%s</text>'
                   % (WIDTH - MARGIN - 150, MARGIN + 14 * (i + 1), color, escape(str(label))))
    out.append('</svg>')
    with open(path, 'w') as fd:
        fd.write('\n'.join(out) + '\n')
    logger.debug('wrote %s with %d series', path, len(points))
