import xml.etree.ElementTree as ET

import numpy as np

from mismatch_smc.plotting import downsample_envelope, line_plot_svg, write_comparison_plots, write_trajectory_plots
from mismatch_smc.simulation import ScenarioConfig, simulate


def test_envelope_keeps_extremes():
    t = np.arange(30001) * 1e-3
    y = np.where(np.arange(t.size) % 2 == 0, 1.0, -1.0)
    y[12345] = 7.0
    ts, ys = downsample_envelope(t, y, buckets=500)
    assert ts.size < 2000
    assert ys.max() == 7.0 and ys.min() == -1.0
    assert np.all(np.diff(ts) > 0)
    assert ts[0] == 0.0 and ts[-1] == t[-1]


def test_short_series_untouched():
    t = np.arange(10.0)
    ts, ys = downsample_envelope(t, t * 2)
    assert np.array_equal(ts, t)


def test_svg_is_well_formed():
    t = np.linspace(0, 1, 50)
    svg = line_plot_svg([("a<b", t, np.sin(t)), ("flat", t, np.zeros_like(t))], title="T & U", ylabel="y")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


def test_constant_and_nan_series():
    t = np.linspace(0, 1, 5)
    y = np.array([1.0, np.nan, 1.0, 1.0, 1.0])
    ET.fromstring(line_plot_svg([("c", t, y)]))


def test_file_writers(tmp_path):
    tr = simulate(ScenarioConfig(duration=0.5))
    paths = write_trajectory_plots(tr, tmp_path, "r")
    assert len(paths) == 5
    for p in paths:
        ET.parse(p)
    paths = write_comparison_plots({"a": tr, "b": tr}, tmp_path, "r")
    assert len(paths) == 3
