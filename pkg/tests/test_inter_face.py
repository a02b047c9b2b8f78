import numpy as np
import pytest
import torch
import torch.nn.functional as F

from hicom.config import InterFaceConfig
from hicom.core.gradcheck import directional_grad_check
from hicom.detectors.inter_face import (
    FacePair,
    InterFaceEncoder,
    contrastive_term,
    embed_faces,
    loss_app,
    pair_distances,
    sample_pairs,
)

TINY = InterFaceConfig(input_size=(16, 16), patch=8, width=8, heads=2, depth=1, embed_dim=4)


def term(distance, y, margin=1.0):
    return float(contrastive_term(torch.tensor([distance], dtype=torch.float64), torch.tensor([y]), margin))


def test_hinge_examples():
    assert abs(term(0.2, 1) - 0.2) < 1e-9
    assert abs(term(0.4, 0) - 0.6) < 1e-9
    assert term(1.5, 0) == 0.0


def test_empty_pairs_give_zero():
    assert float(contrastive_term(torch.zeros(0), torch.zeros(0), 1.0)) == 0.0


def test_term_is_order_invariant():
    d = torch.tensor([0.3, 0.9, 1.4], dtype=torch.float64)
    y = torch.tensor([1, 0, 0])
    perm = torch.tensor([2, 0, 1])
    assert float(contrastive_term(d, y, 1.0)) == pytest.approx(float(contrastive_term(d[perm], y[perm], 1.0)))


def test_pair_distances_are_symmetric():
    emb = torch.randn(3, 4, generator=torch.Generator().manual_seed(0))
    forward = pair_distances(emb, [FacePair(0, 2, 1)])
    backward = torch.linalg.vector_norm(emb[2] - emb[0])
    assert float(forward[0]) == pytest.approx(float(backward))


def test_sample_pairs():
    assert len(sample_pairs([0, 1, 0], 32, 0)) == 3
    assert sample_pairs([1], 32, 0) == []
    labels = [0] * 9 + [1]
    pairs = sample_pairs(labels, 32, seed=3)
    assert len(pairs) == 32
    assert any(p.y_pl == 0 for p in pairs)
    assert pairs == sample_pairs(labels, 32, seed=3)
    with pytest.raises(ValueError):
        FacePair(2, 1, 0)


def test_lambda_zero_is_plain_cross_entropy():
    logits = torch.tensor([[2.0, -1.0], [0.5, 0.3]])
    y = torch.tensor([0, 1])
    emb = torch.randn(2, 4)
    cfg = InterFaceConfig(input_size=(16, 16), patch=8, lambda_comp=0.0)
    loss = loss_app(logits, y, emb, [FacePair(0, 1, 0)], cfg)
    assert float(loss) == pytest.approx(float(F.cross_entropy(logits, y)))


def test_perfect_logits_and_collapsed_similar_pairs_give_zero_loss():
    logits = torch.tensor([[50.0, -50.0], [50.0, -50.0]])
    emb = torch.ones(2, 4)
    loss = loss_app(logits, torch.tensor([0, 0]), emb, [FacePair(0, 1, 1)], TINY)
    assert float(loss) == pytest.approx(0.0, abs=1e-9)


def test_embeddings_are_deterministic_and_batch_independent():
    torch.manual_seed(0)
    net = InterFaceEncoder(TINY)
    crops = np.random.default_rng(0).random((3, 16, 16, 3)).astype(np.float32)
    emb, p = embed_faces(net, crops)
    assert emb.shape == (3, 4) and p.shape == (3,)
    single = np.concatenate([embed_faces(net, crops[i : i + 1])[0] for i in range(3)])
    np.testing.assert_allclose(emb, single, atol=1e-5)
    same, _ = embed_faces(net, np.stack([crops[0], crops[0]]))
    assert np.linalg.norm(same[0] - same[1]) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        embed_faces(net, crops[:, :8])


def test_loss_gradients_match_finite_differences():
    torch.manual_seed(0)
    net = InterFaceEncoder(TINY).double()
    net.train()
    crops = torch.rand(4, 3, 16, 16, dtype=torch.float64)
    labels = [0, 1, 0, 1]
    pairs = sample_pairs(labels, 32, 0)
    y = torch.tensor(labels)

    def loss_fn():
        embeddings, logits = net(crops)
        return loss_app(logits, y, embeddings, pairs, TINY)

    errors = directional_grad_check(loss_fn, list(net.parameters()), n_directions=100)
    assert max(errors) < 1e-3
