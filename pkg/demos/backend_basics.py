"""Tour of the slot backend: packing, the six ops, and the bit budget.

Every ciphertext is a vector of 2^(log_n - 1) slots plus a modulus budget
in bits. Ciphertext products burn 45 bits, plaintext-mask products 20,
rotations and additions are free. Once the budget cannot cover the next
product the backend refuses, which is how depth limits surface here.
"""

import numpy as np

from hepack import BackendParams, DepthExhaustedError, SlotSimulator

params = BackendParams(log_n=4, log_q=1200)
backend = SlotSimulator(params)
print(f"ring degree 2^{params.log_n} -> {params.slots} slots, "
      f"fresh budget {params.log_q} bits")

a = backend.encrypt([1.0, 2.0, 3.0])
b = backend.encrypt([10.0, 20.0, 30.0])
print("a      ", backend.decrypt(a))
print("b      ", backend.decrypt(b))
print("a+b    ", backend.decrypt(backend.add(a, b)), "budget", backend.add(a, b).budget_bits)
print("a*b    ", backend.decrypt(backend.mul(a, b)), "budget", backend.mul(a, b).budget_bits)
print("2a     ", backend.decrypt(backend.cmul(a, 2.0)), "budget", backend.cmul(a, 2.0).budget_bits)
print("rot(a,1)", backend.decrypt(backend.rot(a, 1)))

# The whole vector rotates, pad slots included; masks carve out windows.
mask = np.array([1.0, 0.0, 1.0])
print("masked ", backend.decrypt(backend.cmul(a, mask)))

# Chain products until the 1200-bit budget refuses the next one.
ct = backend.encrypt(np.ones(params.slots))
count = 0
try:
    while True:
        ct = backend.mul(ct, backend.encrypt(np.ones(params.slots)))
        count += 1
except DepthExhaustedError as e:
    print(f"{count} chained products fit (45 bits each), then: {e}")

print("ledger:", backend.ledger.snapshot())
