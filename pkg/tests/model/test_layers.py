import numpy as np
from mmreason.model.layers import (
    NEG_INF,
    Dropout,
    EncoderBlock,
    MultiHeadAttention,
    causal_mask,
    padding_mask,
)
from mmreason.tensor import Tensor


def test_padding_mask():
    mask = padding_mask([2, 3], 3)
    assert mask.shape == (2, 1, 1, 3)
    assert mask[0, 0, 0].tolist() == [0.0, 0.0, NEG_INF]
    assert not mask[1].any()


def test_causal_mask():
    mask = causal_mask(3)[0, 0]
    assert mask.shape == (3, 3)
    assert np.array_equal(mask == 0, np.tril(np.ones((3, 3), dtype=bool)))


def test_padded_keys_are_ignored(float64, rng):
    drop = Dropout(0.0, rng)
    attention = MultiHeadAttention(4, 2, rng, drop)
    x = rng.normal(size=(1, 3, 4))
    memory = rng.normal(size=(1, 5, 4))
    mask = padding_mask([3], 5)
    out = attention(Tensor(x), Tensor(memory), mask).data
    memory[0, 3:] = rng.normal(size=(2, 4)) * 100
    changed = attention(Tensor(x), Tensor(memory), mask).data
    assert np.allclose(out, changed, atol=1e-12)


def test_train_and_eval_propagate(rng):
    drop = Dropout(0.5, rng)
    block = EncoderBlock(4, 2, 8, rng, drop)
    block.eval()
    assert not block.self_attn.training and not drop.training
    x = Tensor(rng.normal(size=(1, 2, 4)))
    assert np.array_equal(block(x, None).data, block(x, None).data)
    block.train()
    assert block.ffn.training and drop.training


def test_zero_grad(rng):
    block = EncoderBlock(4, 2, 8, rng, Dropout(0.0, rng))
    for _, param in block.named_parameters():
        param.grad = np.ones_like(param.data)
    block.zero_grad()
    assert all(param.grad is None for _, param in block.named_parameters())
