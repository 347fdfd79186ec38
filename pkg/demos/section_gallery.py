"""Drive the command line to plot sections and emit reports.

Writes body and plane files, runs the `section` and `classify` commands
in-process, and leaves SVG plots plus JSON reports in demos/out/.
"""

import json
from pathlib import Path

from kkit.cli import main as kkit

OUT = Path(__file__).resolve().parent / "out"


def run(*argv):
    code = kkit([str(a) for a in argv])
    print(f"  kkit {' '.join(str(a) for a in argv)}  ->  exit {code}")
    return code


def main():
    OUT.mkdir(exist_ok=True)
    ball = OUT / "ball.json"
    ball.write_text(json.dumps({
        "type": "ellipsoid",
        "Q": [[1.0, 0.2, 0.0], [0.2, 2.0, 0.1], [0.0, 0.1, 3.0]],
    }))
    box = OUT / "box.json"
    box.write_text(json.dumps({
        "type": "polytope",
        "vertices": [
            [-1, -1, -2], [-1, -1, 2], [-1, 1, -2], [-1, 1, 2],
            [1, -1, -2], [1, -1, 2], [1, 1, -2], [1, 1, 2],
        ],
    }))
    plane = OUT / "plane.json"
    plane.write_text(json.dumps({"frame": [[1, 0, 0.2], [0, 1, 0]]}))
    region = OUT / "region.json"
    region.write_text(json.dumps({"base": [[1, 0, 0], [0, 1, 0]], "halfwidths": 0.2}))

    print("section plots (boundary polyline, dashed quadric overlay when it fits):")
    run("section", ball, plane, "--svg", OUT / "ball.svg", "--report", OUT / "ball_section.json")
    run("section", box, plane, "--svg", OUT / "box.svg", "--report", OUT / "box_section.json")

    print("classification reports:")
    run("classify", ball, region, "--grid", "3", "--report", OUT / "ball_classify.json")
    run("classify", box, region, "--grid", "3", "--report", OUT / "box_classify.json")

    for name in ("ball_classify", "box_classify"):
        doc = json.loads((OUT / f"{name}.json").read_text())
        print(f"  {name}: verdict {doc['verdict']}")
    print(f"artifacts in {OUT}")


if __name__ == "__main__":
    main()
