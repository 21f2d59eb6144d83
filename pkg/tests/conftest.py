import sys
import numpy as np
import pytest

from polytope_lens.net import Activation, Layer, PwlNetwork, init_random


def naive_forward(net, x):
    """Loop-only reference: returns (pre, post) lists for a single input."""
    cur = [float(v) for v in x]
    pres, posts = [], []
    for layer in net.layers:
        W, b = layer.weights, layer.bias
        z = []
        for i in range(W.shape[0]):
            s = b[i]
            for j in range(W.shape[1]):
                s += W[i, j] * cur[j]
            z.append(s)
        cur = [max(v, 0.0) for v in z] if layer.activation is Activation.RELU else list(z)
        pres.append(np.array(z))
        posts.append(np.array(cur))
    return pres, posts


def with_biases(net, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    return PwlNetwork(tuple(
        Layer(l.weights, rng.normal(0.0, scale, l.fan_out), l.activation) for l in net.layers
    ))


def relu_then_readout(W, b):
    """A single ReLU layer followed by an identity copy, so the logits equal the ReLU output."""
    W = np.atleast_2d(np.asarray(W, float))
    n = W.shape[0]
    return PwlNetwork((Layer(W, b, "relu"), Layer(np.eye(n), np.zeros(n), "identity")))


@pytest.fixture
def biased_net():
    return with_biases(init_random([2, 4, 4, 3], 3), 4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
