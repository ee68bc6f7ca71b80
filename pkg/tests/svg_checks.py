"""Shared SVG parsing helpers for figure tests."""

import re
import xml.etree.ElementTree as ET


def parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


def by_class(root: ET.Element, token: str) -> list[ET.Element]:
    out = []
    for el in root.iter():
        classes = el.get("class", "").split()
        if token in classes:
            out.append(el)
    return out


def polygon_pts(el: ET.Element) -> list[tuple[float, float]]:
    return [
        (float(a), float(b))
        for a, b in (pair.split(",") for pair in el.get("points").split())
    ]


def shoelace(pts) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


_TRANSLATE = re.compile(r"translate\(([-0-9.]+) ([-0-9.]+)\)")


def assert_within_viewbox(svg: str):
    root = parse(svg)
    w, h = float(root.get("width")), float(root.get("height"))

    def walk(el, dx, dy):
        m = _TRANSLATE.search(el.get("transform", ""))
        if m:
            dx, dy = dx + float(m.group(1)), dy + float(m.group(2))
        xs, ys = [], []
        for attr in ("x", "x1", "x2", "cx"):
            if el.get(attr) is not None:
                xs.append(float(el.get(attr)))
        for attr in ("y", "y1", "y2", "cy"):
            if el.get(attr) is not None:
                ys.append(float(el.get(attr)))
        if el.get("points"):
            for px, py in polygon_pts(el):
                xs.append(px)
                ys.append(py)
        for x in xs:
            assert -1e-6 <= x + dx <= w + 1e-6, f"{el.tag} x={x} off canvas"
        for y in ys:
            assert -1e-6 <= y + dy <= h + 1e-6, f"{el.tag} y={y} off canvas"
        for child in el:
            walk(child, dx, dy)

    walk(root, 0.0, 0.0)
