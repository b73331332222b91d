"""Flows by Picard windows, the group laws, and Trouvé generators.

Run with ``python demos/flows_and_group.py`` (about 15 s).
"""

import numpy as np

from jetflow.catalog import Profile
from jetflow.flow import SeparableField, concat_fields, det_jacobian_min, reverse_field, solve_flow
from jetflow.group import DiffeoRep, compose, invert, is_member, polygon_generator, refine_polygon, trouve_generator
from jetflow.spaces import GridSpec

x0 = np.linspace(-3, 3, 9)[:, None]

# u(t, x) = sin x has the closed-form flow 2 arctan(e^t tan(x0/2))
sin = SeparableField(Profile("sin", 1))
traj = solve_flow(sin, x0, 1)
exact = 2 * np.arctan(np.e * np.tan(x0 / 2))
print("sin field: windows", [round(w.delta, 3) for w in traj.windows],
      "| max error at t=1:", float(np.max(np.abs(traj.flow(1.0) - exact))),
      "| min det:", round(det_jacobian_min(traj), 4))

# running u then v is the flow of the concatenated field; the reversed field undoes u
u = SeparableField(Profile("gaussian", 1, params={"amplitude": 0.8}))
v = SeparableField(Profile("tanh", 1, params={"amplitude": 0.5}))
there = solve_flow(u, x0, 0).flow(1.0)
both = solve_flow(concat_fields(u, v), x0, 0).flow(1.0)
print("concat vs sequential:", float(np.max(np.abs(both - solve_flow(v, there, 0).flow(1.0)))))
print("reverse undoes u:    ", float(np.max(np.abs(solve_flow(reverse_field(u), there, 0).flow(1.0) - x0))))

# diffeomorphisms Id + phi on a grid
grid = GridSpec(1, 6.0, 121)
P = DiffeoRep.from_profile(grid, Profile("gaussian", 1, params={"amplitude": 0.3}), 2)
m = is_member(P)
print(f"\nId + 0.3 exp(-x^2): member {m.member}, min det {m.det_min:.4f} at x = {m.argmin[0]:.2f}")
print("inverse round trip:", float(np.max(np.abs(compose(invert(P), P).phi.values))))
print("Trouvé generator reproduces it to",
      float(np.max(np.abs(solve_flow(trouve_generator(P), x0, 0).flow(1.0) - P(x0)))))

# a large diffeomorphism: the straight segment to it leaves the group, a polygon does not
big = DiffeoRep.from_profile(grid, Profile("x_gauss", 1, params={"amplitude": 1.6}), 2)
verts = [DiffeoRep.identity(grid)] + refine_polygon(big)
reached = solve_flow(polygon_generator(verts), x0, 0).flow(1.0)
print(f"\nId + 1.6 x exp(-x^2): sup|dphi| = {big.dphi_sup():.2f}, polygon with {len(verts)} vertices,",
      "error", float(np.max(np.abs(reached - big(x0)))))
