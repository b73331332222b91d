"""Jets, Faà di Bruno composition and the combinatorial majorant.

Run with ``python demos/jets_and_composition.py``.
"""

import numpy as np

from jetflow.jets import JetPoly, childress_check, fit_majorant_constants, jet_compose, jet_inverse
from jetflow.sequences import WeightSequence

K = 5
x0 = np.array([[0.4]])

# sin(exp(x)) two ways: composing jets, and pushing the identity jet through both functions
x = JetPoly.identity(x0, K)
inner = x.exp()
outer = JetPoly.identity(inner.value, K).sin()
composed = jet_compose(outer, inner)
direct = x.exp().sin()
print("normalized Taylor coefficients of sin(exp(x)) at 0.4")
for n, (a, b) in enumerate(zip(composed.coeffs[0, :, 0], direct.coeffs[0, :, 0])):
    print(f"  order {n}: composed {a:+.12f}   direct {b:+.12f}")

# a jet and its compositional inverse give back the identity jet
phi = x + 0.3 * (-(x * x)).exp()
inv = jet_inverse(phi)
print("\nmax |jet(Phi^-1 o Phi) - jet(Id)| =",
      float(np.max(np.abs(jet_compose(inv, phi).coeffs - JetPoly.identity(x0, K).coeffs))))

# the majorant sum behind the composition estimate, for two weight sequences
for name, M in [("M = 1", WeightSequence.constant()), ("Gevrey s = 1", WeightSequence.gevrey(1.0))]:
    fit = fit_majorant_constants(M, A=1.0, m=1, n=1, max_order=8)
    childress = all(childress_check(M, n) for n in range(1, 9))
    print(f"\n{name}: majorant constants B = {fit.B:.3g}, C = {fit.C:.3g}; Childress inequality up to 8: {childress}")
