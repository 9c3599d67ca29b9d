"""End-to-end encrypted inference on a small random network.

Same five-layer chain as the full model (conv, cubic, fc, cubic, fc) on
an 8x8 grid so the whole thing runs in well under a second. The decrypted
logits are compared against a plain numpy forward pass, and the per-layer
budget spending is printed alongside the closed-form prediction.
"""

import numpy as np

from hepack import (BackendParams, SlotSimulator, infer_images,
                    predict_layer_costs, predict_op_counts, random_network,
                    reduced_geometry, reference_infer)

geo = reduced_geometry()
print("geometry:", geo)

rng = np.random.default_rng(0)
net = random_network(rng, **geo)
images = rng.uniform(0.0, 1.0, size=(geo["batch"], geo["h"], geo["w"]))

params = BackendParams.for_slots(geo["batch"] * geo["row_width"])
backend = SlotSimulator(params)
res = infer_images(backend, net, images, geo["row_width"])
ref = reference_infer(net, images)

print(f"\nmax |logit error| vs plain forward pass: {np.abs(res.logits - ref).max():.2e}")
print("argmax agreement:", (res.logits.argmax(1) == ref.argmax(1)).sum(),
      "/", geo["batch"])

print(f"\n{'layer':<8}{'depth bits':>12}")
for name, bits in res.layer_depths:
    print(f"{name:<8}{bits:>12}")
print(f"{'total':<8}{res.depth_bits:>12}  (budget {params.log_q})")

want = predict_op_counts(net, geo["batch"], geo["row_width"], params)
got = {key: res.op_counts[key] for key in want}
print("\npredicted op counts:", want)
print("measured  op counts:", got)
print("closed form matches:", want == got)

print(f"\n{'layer':<8}{'mul':>6}{'cmul':>6}{'rot':>6}{'add':>6}{'depth':>6}")
for cost in predict_layer_costs(net, geo["batch"], geo["row_width"], params):
    print(f"{cost.name:<8}{cost.mul:>6}{cost.cmul:>6}{cost.rot:>6}"
          f"{cost.add:>6}{cost.depth_bits:>6}")
