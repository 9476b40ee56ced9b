"""Exact structural checks on the two built-in chains.

Both chains take one step by duplicating a uniformly random element
(point of a permutation diagram, vertex of a graph) and then deleting a
uniformly random one.  Everything here runs in exact rational
arithmetic; nothing is sampled.
"""
from fractions import Fraction

from updown import graphs, kernels, permutations

P = Fraction(1, 3)

for make, label in ((permutations.chain, "permutations"), (graphs.chain, "graphs")):
    spec = make(P, 6)
    print(f"=== {label}, p = {P} ===")

    # The whole theory hangs on one identity between the up and down
    # moves: going up then down equals a damped down-then-up plus a lazy
    # identity term, with weight beta_n = (n-1)/(n+1).
    for n in range(2, 5):
        report = kernels.verify_commutation(spec, n)
        print(f"  commutation at size {n}: holds={report.holds} "
              f"beta={report.beta_checked}")

    # Iterating the relation pins the full spectrum of the up-down step.
    print("  spectrum of the size-4 step operator:")
    for line in kernels.spectrum_report(spec, 4):
        print(f"    eigenvalue {str(line.eigenvalue):>5}  "
              f"multiplicity {line.multiplicity}")

    # The stationary law is the distribution of the recursively built
    # random object (separable permutation / cograph).
    masses = kernels.stationary(spec, 4)
    states = kernels.level_states(spec, 4)
    support = [(s, m) for s, m in zip(states, masses) if m]
    print(f"  stationary law at size 4: {len(support)} of {len(states)} "
          f"states carry mass")
    top = sorted(support, key=lambda sm: -sm[1])[:3]
    for s, m in top:
        print(f"    {s}: {m}")
    print()
