"""The limit separation profile and its product / symmetry identities.

The limiting profile is an alternating theta-like series.  It also
equals one minus a cubed infinite product, and satisfies an exact
t <-> pi^2/t symmetry; both identities give strong independent checks
on the numerics, and the symmetry turns the hard small-t regime into
the easy large-t one.
"""
import math

from updown import separation

print("   t      profile          product residual   symmetry residual")
for t in (0.1, 0.3, 0.5, 1.0, 2.0, 4.0, 8.0):
    sv = separation.sepdist_limit(t)
    rp = separation.eta_product_residual(t)
    rs = separation.eta_symmetry_residual(t)
    print(f" {t:5.2f}   {sv.value:.12e}   {rp: .2e}          {rs: .2e}")
print()

# the two tails: a single exponential for large t, an essential
# singularity for small t
t = 8.0
lead = 3 * math.exp(-2 * t)
print(f"large t: profile(8) / 3e^-16 - 1 = "
      f"{separation.sepdist_limit(t).value / lead - 1:.2e}")

t = 0.2
truth = 1.0 - separation.sepdist_limit(t).value
law = separation.small_t_approx(t)
print(f"small t: 1 - profile(0.2) = {truth:.6e}, leading law = {law:.6e}")
print(f"         direct relative gap {abs(law/truth-1):.2%}, "
      f"log-scale gap {abs(math.log(law)-math.log(truth))/abs(math.log(truth)):.3%}")
