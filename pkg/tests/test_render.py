import math
import re
import xml.etree.ElementTree as ET

import numpy as np

from loopysim.geometry import TWO_PI, reconstruct_polygon
from loopysim.render import ShapeStyle, render_shape

from .oracles import brute_self_intersects

SVG = "{http://www.w3.org/2000/svg}"


def _parse(text):
    return ET.fromstring(text.encode("utf-8"))


def _path_points(root):
    d = root.find(f"{SVG}path").get("d")
    return re.findall(r"(-?\d+\.\d+) (-?\d+\.\d+)", d)


def test_square_has_four_vertices():
    root = _parse(render_shape(reconstruct_polygon([math.pi / 2] * 4)))
    assert root.get("version") == "1.1"
    assert len(_path_points(root)) == 4
    assert root.find(f"{SVG}path").get("d").endswith("Z")
    assert root.find(f"{SVG}line") is None  # closed, no gap line
    assert len(root.findall(f".//{SVG}circle")) == 4


def test_open_chain_draws_gap():
    root = _parse(render_shape(reconstruct_polygon([0.3] * 8)))
    gap = root.find(f"{SVG}line")
    assert gap is not None and gap.get("class") == "gap"


def test_crossing_markers_match_oracle():
    rng = np.random.default_rng(11)
    seen = 0
    for _ in range(200):
        theta = rng.normal(TWO_PI / 12, 0.6, 12)
        g = reconstruct_polygon(theta)
        root = _parse(render_shape(g))
        markers = root.findall(f".//{SVG}circle[@class='crossing']")
        assert bool(markers) == brute_self_intersects(theta)
        assert [tuple(map(int, m.get("data-segments").split())) for m in markers] == [(i, j) for i, j, _ in g.crossings]
        seen += bool(markers)
    assert seen > 10


def test_known_crossing_is_marked_and_red():
    g = reconstruct_polygon([0.0, 2.6, 2.6, 0.0, 2.6, 2.6])
    style = ShapeStyle()
    root = _parse(render_shape(g, style))
    assert root.find(f"{SVG}path").get("stroke") == style.invalid_stroke
    assert len(root.findall(f".//{SVG}circle[@class='crossing']")) == 2


def test_render_is_byte_stable():
    theta = TWO_PI / 36 + 0.2 * np.sin(2 * np.pi * 3 * np.arange(36) / 36)
    a = render_shape(reconstruct_polygon(theta), ShapeStyle(title="a & b"))
    b = render_shape(reconstruct_polygon(theta.copy()), ShapeStyle(title="a & b"))
    assert a == b
    assert "a &amp; b" in a
    _parse(a)
