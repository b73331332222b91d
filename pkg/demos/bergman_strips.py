"""Bergman norms on strips, the extension/restriction pair, and a flow staying analytic.

Run with ``python demos/bergman_strips.py``.
"""

from jetflow.bergman import (
    BergmanFunction,
    Polystrip,
    bergman_norm,
    gaussian_corpus,
    inclusion_verify,
    ode_closedness_demo,
    width_ladder,
)
from jetflow.catalog import Profile, TimeProfile
from jetflow.flow import SeparableField

F = BergmanFunction.from_profile(Polystrip(1, 1.0), Profile("gaussian", 1, 1))
print("||exp(-z^2)||_{A^2(S_1)} =", round(bergman_norm(F, 2.0), 6))
print("widening the strip:", [(round(r, 3), round(v, 4)) for r, v in width_ladder(F, 2.0)])

rep = inclusion_verify(gaussian_corpus(), r=1.0, p=2.0, sigma=0.5, rho=2.0)
print("\nGaussian widths     ratio_S   ratio_R")
for row in rep.rows:
    print(f"  {row.tag:<15}{row.ratio_S:10.3g}{row.ratio_R:10.3g}")
print(f"constants: C_S = {rep.C_S:.4f}, C_R = {rep.C_R:.4f}; bounded: {rep.bounded}")

u = SeparableField(Profile("sin_gauss", 1, params={"amplitude": 0.3}), TimeProfile("cosine", {"c0": 1.0, "c1": 0.5}))
demo = ode_closedness_demo(u)
print(f"\nflow extended to the strip of half-width {demo.r_prime}:")
print("  A^2 norm of phi(t) at t = 0, 0.5, 1:", [round(demo.rows[i].norm, 5) for i in (0, 8, 16)])
print("  largest step between partition nodes:", [(n, f"{v:.2e}") for n, v in demo.steps])
print("  shrinking under refinement:", demo.shrinking, "| worst series truncation bound:", f"{demo.max_tail:.1e}")
