"""SVG rendering of capacity reports."""

import pytest

from ipcap.capacity import augment_constant
from ipcap.errors import PreconditionError
from ipcap.estimators import EstimatorConfig, estimate
from ipcap.plots import (
    KIND_CAPACITY_BARPLOT,
    KIND_CAPACITY_MATRIX,
    capacity_barplot_svg,
    capacity_matrix_svg,
    render_report,
)
from ipcap.sampling import sobol_points
from ipcap.synthetic import evaluate_readouts, make_synthetic


def _report(q=2, d_max=3, seed=0):
    system = make_synthetic(q, d_max, 3, 4, seed=seed)
    samples = sobol_points(q, 256)
    data = augment_constant(evaluate_readouts(system, samples))
    return estimate(data, system.basis, EstimatorConfig())


def test_matrix_svg_structure():
    report = _report()
    svg = capacity_matrix_svg(report)
    assert svg.startswith("<svg ")
    assert svg.endswith("</svg>\n")
    assert "Capacity matrix" in svg
    assert "degree of input 1" in svg and "degree of input 2" in svg
    # 4x4 degree grid plus the legend gradient bar
    assert svg.count("<rect ") == 16 + 1
    # six pairs exceed the total-degree cap
    assert svg.count("beyond degree cap") == 6
    assert svg.count("capacity 0.") + svg.count("capacity 1.") == 10
    badge = f"{report.total_corrected:.2f} / {report.max_capacity:g}"
    assert badge in svg


def test_matrix_requires_two_inputs():
    with pytest.raises(PreconditionError):
        capacity_matrix_svg(_report(q=3, d_max=2))


def test_barplot_structure():
    report = _report()
    svg = capacity_barplot_svg(report)
    assert svg.startswith("<svg ")
    assert svg.endswith("</svg>\n")
    assert "Capacity by total degree" in svg
    assert "total degree" in svg
    for label in ("single variable", "two-variable", "higher-order"):
        assert label in svg
    badge = f"{report.total_corrected:.2f} / {report.max_capacity:g}"
    assert badge in svg


def test_barplot_accepts_any_input_count():
    svg = capacity_barplot_svg(_report(q=3, d_max=2))
    assert "Capacity by total degree" in svg


def test_render_dispatch():
    report = _report()
    assert render_report(report, KIND_CAPACITY_MATRIX) == capacity_matrix_svg(report)
    assert render_report(report, KIND_CAPACITY_BARPLOT) == capacity_barplot_svg(report)
    with pytest.raises(PreconditionError):
        render_report(report, "histogram")


def test_renders_are_byte_stable():
    first = _report()
    second = _report()
    assert capacity_matrix_svg(first) == capacity_matrix_svg(second)
    assert capacity_barplot_svg(first) == capacity_barplot_svg(second)
