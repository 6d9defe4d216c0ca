#!/usr/bin/env python3
# Build hash centers with each of the three sampling strategies and
# inspect their pairwise Hamming separation.
import numpy as np

from icshash import generate_centers, min_pairwise_hamming, sylvester_hadamard

h = sylvester_hadamard(3)
print("order-8 doubling construction:")
print(h)
print("gram matrix (rows orthogonal):")
print(h.astype(np.int64) @ h.T)
print()

for k_bits, m_labels in [(16, 10), (16, 24), (48, 80)]:
    cs = generate_centers(k_bits, m_labels, seed=7)
    print(
        f"K={k_bits:>2} M={m_labels:>2}: strategy={cs.strategy:<16} "
        f"min pairwise Hamming={min_pairwise_hamming(cs)}"
    )

# balance: every Bernoulli center carries half +1 bits
cs = generate_centers(48, 80, seed=7)
ones = (cs.centers == 1).sum(axis=1)
print(f"\nBernoulli balance: +1 counts in {sorted(set(ones.tolist()))} (K/2 = 24)")
