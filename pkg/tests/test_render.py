from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from latentprm import render
from latentprm.geometry import generate_workspace, get_robot, rasterize
from latentprm.planner import PlanSpec, plan_baseline, random_query

NS = "{http://www.w3.org/2000/svg}"


def test_scene_svg_has_obstacles_roadmap_and_path(tmp_path):
    ws = generate_workspace("2DS", 2)
    robot = get_robot("point2d")
    q = random_query(robot, ws, np.random.default_rng(0))
    path, stats = plan_baseline(ws, robot, q, PlanSpec(n_samples=60, seed=0))
    text = render.render_scene(ws, stats.roadmap, path, q)
    root = ET.fromstring(text)
    assert len(root.findall(f"{NS}rect")) == 1 + len(ws.obstacles)
    assert len(root.findall(f"{NS}line")) == stats.roadmap.n_edges()
    assert len(root.findall(f"{NS}polyline")) == (1 if path is not None else 0)
    render.write_svg(tmp_path / "s.svg", text)
    assert (tmp_path / "s.svg").read_text() == text


def test_slices_fill_occupied_cells():
    g = rasterize(generate_workspace("3DC", 0))
    root = ET.fromstring(render.render_slices(g, axis=2))
    assert len(root.findall(f"{NS}rect")) == 11 + int(np.sum(g.values > 0))


def test_scene_rejects_3d():
    with pytest.raises(ValueError):
        render.render_scene(generate_workspace("3DC", 0))
