"""Area error of the mapped disk rules on a 1 x 0.5 rectangle as the rule is refined.

The map derivative vanishes or blows up at the prevertices, so the tensor
polar rules converge slowly; this prints the measured behaviour.
"""
import numpy as np

from xfrac.geometry import Polygon
from xfrac.sccm import chebyshev_disk_rule, midpoint_disk_rule, polygon_quadrature, solve_parameter_problem

RECT = Polygon(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]]))


def main():
    cmap = solve_parameter_problem(RECT)
    print(f"{'n_r':>5} {'n_t':>5} {'midpoint':>12} {'chebyshev':>12}")
    for n in (4, 8, 16, 32, 64, 128):
        errs = [abs(polygon_quadrature(RECT, make(n, 2 * n), cmap=cmap)[1].sum() - RECT.area) / RECT.area
                for make in (midpoint_disk_rule, chebyshev_disk_rule)]
        print(f"{n:5d} {2 * n:5d} {errs[0]:12.3e} {errs[1]:12.3e}")


if __name__ == "__main__":
    main()
