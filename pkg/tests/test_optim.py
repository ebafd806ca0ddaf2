"""Adam"""

import numpy as np
import pytest

from src.nn.module import Parameter
from src.nn.optim import Adam, AdamState, adam_step
from src.utils.errors import ContractError


def param(value, trainable=True, name="p"):
    p = Parameter(np.shape(value), init="zeros", dtype=np.float64, trainable=trainable)
    p.data = np.asarray(value, dtype=np.float64)
    p.name = name
    return p


def test_zero_gradient_leaves_parameter_unchanged():
    p = param([1.0, -2.0])
    adam_step([p], [np.zeros(2)], AdamState(), lr=0.1)
    assert np.array_equal(p.data, [1.0, -2.0])


def test_first_step_moves_by_lr_times_sign():
    p = param([0.5, 0.5])
    state = adam_step([p], [np.array([1.0, -3.0])], AdamState(), lr=0.1)
    assert np.allclose(p.data, [0.4, 0.6], atol=1e-6)
    assert state.t == 1
    assert set(state.m) == {"p"}


def test_frozen_parameter_is_bit_identical():
    p = param([1.0, 2.0], trainable=False)
    before = p.data.copy()
    state = adam_step([p], [np.ones(2)], AdamState(), lr=0.1)
    assert np.array_equal(p.data, before)
    assert state.m == {}


def test_shape_mismatch_is_contract_error():
    p = param([1.0, 2.0])
    with pytest.raises(ContractError):
        adam_step([p], [np.ones(3)], AdamState(), lr=0.1)
    with pytest.raises(ContractError):
        adam_step([p], [], AdamState(), lr=0.1)


def test_optimizer_class_uses_param_grads():
    p = param([1.0])
    q = param([1.0], name="q")
    opt = Adam([p, q], lr=0.01)
    p.grad = np.array([2.0])
    opt.step()
    assert p.data[0] == pytest.approx(0.99, abs=1e-6)
    assert q.data[0] == 1.0
    opt.zero_grad()
    assert p.grad is None


def test_zero_learning_rate_changes_nothing():
    p = param([0.3, -0.7])
    adam_step([p], [np.array([5.0, 5.0])], AdamState(), lr=0.0)
    assert np.array_equal(p.data, [0.3, -0.7])
