"""Verify the hand-rolled backward pass against central finite
differences on a tiny fixture graph.

Every gradient in training comes from the package's own reverse-mode
tape, so this check is the ground truth for the whole optimizer path:
it perturbs sampled scalar parameters by +/-1e-6, re-evaluates the loss,
and compares the slope with the analytic gradient.

Run:  python demos/05_gradient_check.py
"""

from hetgad import forward_loss, grad_check, gradcheck_fixture, init_params

graph, partition, config = gradcheck_fixture(seed=0)
print("fixture:", {t.name: t.num_nodes for t in graph.node_types},
      "edges:", len(graph.edges["links"]))

params = init_params(graph, partition, config)
print("parameter tensors:", len(params),
      "scalars:", sum(p.data.size for p in params.values()))

result = forward_loss(graph, partition, params, config)
print(f"loss {result.loss.item():.4f} = attr {result.loss_attribute.item():.4f}"
      f" + struct {result.loss_structure.item():.4f}"
      f" + type {result.loss_nodetype.item():.4f}")

err = grad_check(graph, partition, params, config, sample_size=200, seed=0)
print(f"max relative error over 200 sampled parameters: {err:.3e}")
print("PASS" if err <= 1e-4 else "FAIL", "(tolerance 1e-4)")

# The same check through the command line:  hetgad gradcheck --samples 200
