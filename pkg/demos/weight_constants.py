"""Compare A_p and Fujii-Wilson constants along a family of power weights.

Run with ``python3 demos/weight_constants.py``.
"""

from dyadiclab import Domain, ExponentTuple
from dyadiclab.constants import WeightTuple, ap_constant, fw_constant, multilinear_ap, reverse_holder_check
from dyadiclab.lab import alpha_beta, appendix_check
from dyadiclab.weights import power_weight

d = Domain(1, 8)
print(f"{'a':>5} {'[w]_A2':>10} {'[w]_FW':>10} {'RH ratio':>10}")
for a in (-0.6, -0.3, 0.0, 0.3, 0.6):
    w = power_weight(d, a)
    rh = reverse_holder_check(w)
    print(f"{a:5.1f} {ap_constant(w, 2.0).value:10.4f} {fw_constant(w).value:10.4f} {rh.max_ratio:10.4f}")

# two-weight version: the multilinear characteristic and the exponents that go with it
pv = ExponentTuple.of(3, 3)
rep = alpha_beta(pv)
print(f"\npvec {pv}: p = {pv.p:g}, alpha = {rep.alpha:g}, beta = {rep.beta:g}, "
      f"improvement region: {rep.improvement_region}")
# small oscillations break the exact comparison (first-order left side against
# second-order right side); larger ones satisfy it
for a in (0.0, 0.2, 0.4, 0.8):
    wt = WeightTuple((power_weight(d, a), power_weight(d, -a)), pv)
    app = appendix_check(wt)
    print(f"a = {a:.1f}: [w]_p = {multilinear_ap(wt).value:.4f}, "
          f"min_j [v_j]_FW^(1/p) = {app.lhs:.4f} vs [w]_p^gamma = {app.rhs:.4f} "
          f"({'holds' if app.passed else 'fails'})")
