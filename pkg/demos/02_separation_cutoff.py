"""Separation distance to stationarity and the cutoff at n(n+1)t steps.

The distance after m steps has a closed form driven by the rates
c_k = k(k+1).  Plotted against rescaled time t = m / (n(n+1)) the curves
for growing n collapse onto a single limit profile.
"""
import math

from updown import separation

print("exact small-size values (rationals):")
for m in range(5):
    sv = separation.sepdist_discrete(3, m, exact=True)
    print(f"  size 3, m={m}: {sv.value}")
print()

print("rescaled curves approach the limit profile from below:")
print("      t     n=10        n=50        n=200       limit")
for t in (0.25, 0.5, 1.0, 1.5, 2.0):
    row = []
    for n in (10, 50, 200):
        m = math.floor(n * (n + 1) * t)
        row.append(separation.sepdist_discrete(n, m).value)
    lim = separation.sepdist_limit(t).value
    print(f"  {t:5.2f}  " + "  ".join(f"{float(v):.8f}" for v in row)
          + f"  {lim:.8f}")
print()

# every value carries a certified error bound; the library aborts rather
# than return digits it cannot back
sv = separation.sepdist_continuous(200, 1.0)
print(f"continuous-time size 200 at t=1: {sv.value:.15f} "
      f"(err bound {sv.err_bound:.1e}, method {sv.method})")
