"""Geometric constants and user-facing messages"""

import math

FOUR_PI = 4.0 * math.pi
SQRT3 = math.sqrt(3.0)

# Croke surface: two equilateral triangles of side 2 doubled along their boundary
CROKE_AREA = 2.0 * SQRT3
CROKE_SIDE = 2.0
CROKE_LATTICE_SYSTOLE = 2.0 * SQRT3
CONE_ANGLE = 2.0 * math.pi / 3.0
CONE_CIRCUMFERENCE_RATIO = 1.0 / 3.0
CONE_GRAPH_SLOPE = 2.0 * math.sqrt(2.0)

# Zoo comparison band in colatitude
ZOO_BAND = (math.pi / 3.0, 2.0 * math.pi / 3.0)

MESSAGES = {
    "mass_too_small": "mass below Hawking bound: 16*pi*m^2 must exceed the horizon area",
    "not_in_m_plus": "metric is not in M+: first stability eigenvalue is not positive",
    "matching_infeasible": "collar slope cannot reach the bent Schwarzschild slope for any admissible epsilon",
    "cap_radius_range": "cap radius must satisfy 0 < r0 < 2 - sqrt(3) so that the caps are disjoint and case 3 dominates",
    "membership_uncertified": "surface is not certified in M+ by the FEM eigenvalue",
}
