"""Smoke test for the catcheck extension module. Run after `pip install`."""

import math
from pathlib import Path

import catcheck

DATA = Path(__file__).resolve().parents[3] / "data"


def main():
    assert abs(catcheck.ptolemy_defect(1, 1, 1, 1, math.sqrt(2), math.sqrt(2))) < 1e-12

    square = catcheck.Complex.from_json((DATA / "square.cx").read_text())
    assert square.dimension == 2 and square.curvature == 0.0
    again = catcheck.Complex.from_json(square.to_json())
    assert again.simplex_count == square.simplex_count

    d, budget = square.distance(square.vertex(0), square.vertex(1))
    assert d > 0 and budget >= 0
    dev, svg = square.develop()
    assert dev["max_distortion"] < 1e-9 and svg.startswith("<svg")

    cone = catcheck.Complex.generate("cone(4.712389,3,2.0)")
    links = cone.link_check()
    assert any(not v["passes"] for v in links)

    ce = cone.counterexample(epsilon=0.1, mesh=0.01)
    assert ce["witness"]["certified"], ce["witness"]

    scan = cone.ptolemy_scan(samples=200, seed=7, mesh=0.05)
    assert scan["certified_count"] > 0

    report = cone.pipeline(samples=200)
    assert report["outcome"] == "REFUTED", report["outcome"]

    try:
        catcheck.Complex.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("bad input accepted")

    print("catcheck", catcheck.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
