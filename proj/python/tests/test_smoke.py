# SPDX-License-Identifier: Apache-2.0
import math
import os

import pytest

import cald

FIXTURES = os.environ.get("CALD_FIXTURE_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "tests", "fixtures"))


def test_iou_and_mapping():
    a = cald.BoundingBox(0, 0, 10, 10)
    assert cald.iou(a, cald.BoundingBox(5, 0, 15, 10)) == pytest.approx(1 / 3)
    flipped = cald.map_box(cald.BoundingBox(10, 20, 30, 40), cald.AugmentationSpec.horizontal_flip(), cald.ImageSize(100, 100))
    assert (flipped.x_min, flipped.x_max) == (70, 90)


def test_divergence_and_softmax():
    assert cald.js_divergence([1, 0], [0, 1]) == pytest.approx(1.0)
    assert cald.js_divergence([1, 0], [0.5, 0.5]) == pytest.approx(0.3113, abs=1e-4)
    p = cald.softmax([1.0, 0.0])
    assert p[0] == pytest.approx(math.e / (math.e + 1))


def test_consistency():
    box = cald.BoundingBox(0, 0, 10, 10)
    rec = cald.pair_consistency(cald.PredictionRecord(box, [0.9, 0.1]), cald.PredictionRecord(box, [0.9, 0.1]))
    assert rec.m == pytest.approx(1.9)


def test_selection_stages():
    chosen = cald.stage_one([("a", 0.3), ("b", 0.1), ("c", 0.2)], 2, 0.0)
    assert chosen == ["b", "c"]
    assert cald.beta_search(lambda b: -abs(b - 1.3)) == pytest.approx(1.3)


def test_bad_input_raises():
    with pytest.raises(ValueError):
        cald.BoundingBox(0, 0, 0, 1)
    with pytest.raises(cald.DataError):
        cald.js_divergence([0.5, 0.4], [0.5, 0.5])


def test_score_files():
    rows = cald.score_files(os.path.join(FIXTURES, "manifest.json"), os.path.join(FIXTURES, "predictions.jsonl"))
    assert len(rows) == 3


def test_simulate():
    rows = cald.simulate("cald", seeds=[1], images=120, cycles=1, budget=10)
    assert len(rows) == 1
