"""Smoke test for the strokesurf Python extension.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import math
import tempfile
from pathlib import Path

import strokesurf_py as ss


def main():
    # Statistics
    u, p = ss.mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert u == 0.0 and math.isclose(p, 0.1), (u, p)
    assert ss.benjamini_hochberg([0.001, 0.5, 0.02], 0.05) == [True, False, True]

    # Junction of two lines meeting at the origin
    point, objective = ss.solve_junction([[1, 0, 0], [0, 1, 0]], [[1, 0, 0], [0, 1, 0]])
    assert max(abs(c) for c in point) < 1e-9 and objective < 1e-9

    # Unit square: two triangles of total area 1
    triangles, weight = ss.triangulate_polygon([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dihedral=0.0)
    assert len(triangles) == 2 and math.isclose(weight, 1.0)

    # Features of a synthetic sketch
    cube = ss.synth_sketch("cube", jitter=0.1, overdraw=2, seed=1)
    rows = ss.feature_table(cube).strip().splitlines()
    assert len(rows) == 1 + len(json.loads(cube)["strokes"])

    # Train on a few sketches and run the whole pipeline
    corpus = [ss.synth_sketch(obj, jitter=0.1, overdraw=2, seed=s, scribbles_per_face=4)
              for s, obj in enumerate(["cube", "open_box", "wall", "cube", "open_box"])]
    model = ss.train_model(corpus, n_trees=30, seed=0)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "sketch.json").write_text(ss.synth_sketch("cube", seed=7))
        (tmp / "model.json").write_text(model)
        summary = json.loads(ss.run_pipeline(str(tmp / "sketch.json"), str(tmp / "model.json"), str(tmp / "out"),
                                             config_toml=ss.default_config(), threads=1))
        assert summary["verified"] == 6, summary
        assert (tmp / "out" / "mesh.obj").stat().st_size > 0

    try:
        ss.synth_sketch("pyramid")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown object accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
