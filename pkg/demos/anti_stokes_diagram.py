"""Anti-Stokes diagram of ``i y^3 = 1`` and the zero density near ``y_+``.

Writes ``anti_stokes.svg`` to the current directory.
Run with ``python demos/anti_stokes_diagram.py``.
"""

import math

from cubic_lab.model import CutParameter, make_frame
from cubic_lab.wkb import diagram_svg, identify_zero_line, point_on_line, trace_diagram, zero_density


def main():
    frame = make_frame("energy-dominant", 1.0, CutParameter(1.0))
    diagram = trace_diagram(frame, drop_h_terms=True)
    for tp in diagram.turning_points:
        kinds = [ln.kind for ln in diagram.lines[tp]]
        print(f"turning point {tp:.6f}: lines {kinds}")

    tp, line, _ = identify_zero_line(diagram)
    print(f"zero line leaves {tp:.6f} at {math.degrees(line.departure):.2f} degrees ({line.kind})")
    for d in (0.2, 0.1, 0.05, 0.025):
        est = zero_density(1.0, 1.0, point_on_line(diagram, line, d), frame.h, y_plus=tp)
        print(f"d = {d:<6} N0 = {est.N0:.6e}  loop = {est.loop:.6e}  "
              f"relative difference {est.relative_difference:.3%}")

    with open("anti_stokes.svg", "w") as fh:
        fh.write(diagram_svg(diagram))
    print("wrote anti_stokes.svg")


if __name__ == "__main__":
    main()
