"""Model core: forward pass, losses and gradients, SGD, training, checkpoints."""

import math

import numpy as np
import pytest

import unlearnlab as ul
from unlearnlab.models import forward_log_probs


def random_model(rng, kind="linear", d=3, k=3, h=5, activation="tanh"):
    if kind == "linear":
        arch = ul.ArchitectureSpec("linear", d, k)
    else:
        arch = ul.ArchitectureSpec(kind, d, k, hidden_dim=h, activation=activation)
    model = ul.init_model(arch, seed=int(rng.integers(1 << 30)))
    return model.with_theta(rng.normal(scale=0.7, size=model.theta.size))


def fd_gradient(fn, theta, h=1e-5):
    """Central finite differences of a scalar function, coordinate by coordinate."""
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(up) - fn(down)) / (2.0 * h)
    return grad


# ---------------------------------------------------------------- architecture


def test_parameter_counts():
    assert ul.ArchitectureSpec("linear", 4, 3).num_params == 4 * 3 + 3
    arch = ul.ArchitectureSpec("mlp1", 4, 3, hidden_dim=5)
    assert arch.num_params == 5 * 4 + 5 + 3 * 5 + 3


def test_architecture_validation():
    with pytest.raises(ValueError):
        ul.ArchitectureSpec("conv", 4, 3)
    with pytest.raises(ValueError):
        ul.ArchitectureSpec("linear", 0, 3)
    with pytest.raises(ValueError):
        ul.ArchitectureSpec("linear", 4, 1)
    with pytest.raises(ValueError):
        ul.ArchitectureSpec("mlp1", 4, 3, hidden_dim=5, activation="gelu")


def test_init_model_shapes_and_bounds():
    arch = ul.ArchitectureSpec("mlp1", 6, 4, hidden_dim=5, activation="relu")
    model = ul.init_model(arch, seed=9)
    assert model.theta.size == arch.num_params
    assert model.init_seed == 9
    (w1, b1), (w2, b2) = ul.unpack_params(model)
    assert np.all(b1 == 0.0) and np.all(b2 == 0.0)
    a1 = math.sqrt(6.0 / (6 + 5))
    a2 = math.sqrt(6.0 / (5 + 4))
    assert np.all(np.abs(w1) <= a1) and np.all(np.abs(w2) <= a2)
    again = ul.init_model(arch, seed=9)
    assert np.array_equal(model.theta, again.theta)


# ------------------------------------------------------------------- forward


def test_zero_theta_gives_uniform_probabilities():
    model = ul.init_model(ul.ArchitectureSpec("linear", 4, 5), seed=0)
    model = model.with_theta(np.zeros_like(model.theta))
    probs = ul.forward_probs(model, np.random.default_rng(0).normal(size=(7, 4)))
    assert np.allclose(probs, 0.2, atol=1e-15)


def test_forced_two_class_logits():
    # weights chosen so the logits on x=[1] are exactly [0, ln 3]
    model = ul.init_model(ul.ArchitectureSpec("linear", 1, 2), seed=0)
    model = model.with_theta(np.array([0.0, math.log(3.0), 0.0, 0.0]))
    probs = ul.forward_probs(model, np.array([[1.0]]))
    assert np.allclose(probs, [[0.25, 0.75]], atol=1e-15)


def test_softmax_matches_independent_oracle():
    rng = np.random.default_rng(42)
    model = random_model(rng, d=4, k=3)
    x = rng.normal(size=(5, 4))
    z = ul.forward_logits(model, x)
    naive = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    assert np.allclose(ul.forward_probs(model, x), naive, atol=1e-12)


def test_softmax_stable_for_huge_logits():
    model = ul.init_model(ul.ArchitectureSpec("linear", 1, 3), seed=0)
    model = model.with_theta(np.array([1e3, -1e3, 5e2, 0.0, 0.0, 0.0]))
    probs = ul.forward_probs(model, np.array([[1.0]]))
    assert np.all(np.isfinite(probs)) and np.all(probs >= 0)
    assert abs(probs.sum() - 1.0) < 1e-9


def test_forward_rejects_wrong_width():
    model = ul.init_model(ul.ArchitectureSpec("linear", 3, 2), seed=0)
    with pytest.raises(ValueError):
        ul.forward_probs(model, np.zeros((2, 4)))


# ------------------------------------------------------------- kl divergence


def test_kl_identical_distributions_is_zero():
    assert ul.kl_divergence(np.array([0.5, 0.5]), np.array([0.5, 0.5])) == 0.0


def test_kl_zero_mass_terms_drop():
    got = ul.kl_divergence(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    assert abs(got - math.log(2.0)) < 1e-12


def test_kl_quarter_three_quarter():
    got = ul.kl_divergence(np.array([0.25, 0.75]), np.array([0.5, 0.5]))
    oracle = 0.25 * math.log(0.25 / 0.5) + 0.75 * math.log(0.75 / 0.5)
    assert abs(got - oracle) < 1e-15
    assert abs(got - 0.130812) < 1e-6


def test_kl_rejects_nonpositive_p():
    with pytest.raises(ValueError):
        ul.kl_divergence(np.array([0.5, 0.5]), np.array([1.0, 0.0]))


def test_kl_nonnegative_and_zero_only_at_equality():
    rng = np.random.default_rng(3)
    for _ in range(200):
        q = rng.dirichlet(np.ones(4))
        p = rng.dirichlet(np.ones(4)) + 1e-9
        p /= p.sum()
        val = ul.kl_divergence(q, p)
        assert val >= 0.0
        if val < 1e-12:
            assert np.allclose(q, p, atol=1e-5)


# ------------------------------------------------------------ loss and grad


def test_soft_one_hot_equals_hard_label():
    rng = np.random.default_rng(5)
    model = random_model(rng, kind="mlp1", d=3, k=4, h=4)
    x = rng.normal(size=(6, 3))
    y = rng.integers(1, 5, size=6)
    hard_l, hard_g = ul.loss_and_grad(model, x, y, ul.LossSpec("ce_hard"))
    # one-hot targets only make sense batch-wise when every row shares a label
    x1, y1 = x[:1], y[:1]
    one_hot = np.zeros(4)
    one_hot[y1[0] - 1] = 1.0
    soft_l, soft_g = ul.loss_and_grad(
        model, x1, None, ul.LossSpec("ce_soft", soft_target=one_hot))
    ref_l, ref_g = ul.loss_and_grad(model, x1, y1, ul.LossSpec("ce_hard"))
    assert abs(soft_l - ref_l) < 1e-12
    assert np.allclose(soft_g, ref_g, atol=1e-12)
    assert np.isfinite(hard_l) and hard_g.shape == model.theta.shape


def test_kl_target_gradient_equals_soft_ce_gradient():
    rng = np.random.default_rng(6)
    model = random_model(rng, kind="mlp1", d=3, k=3, h=5, activation="relu")
    x = rng.normal(size=(4, 3))
    q = rng.dirichlet(np.ones(3))
    kl_l, kl_g = ul.loss_and_grad(
        model, x, None, ul.LossSpec("kl_to_target", soft_target=q))
    ce_l, ce_g = ul.loss_and_grad(
        model, x, None, ul.LossSpec("ce_soft", soft_target=q))
    assert np.array_equal(kl_g, ce_g)
    # losses differ exactly by the target's entropy
    entropy = -(q[q > 0] * np.log(q[q > 0])).sum()
    assert abs((ce_l - kl_l) - entropy) < 1e-12


def test_negated_hard_loss_is_exact_negation():
    rng = np.random.default_rng(7)
    model = random_model(rng, d=3, k=3)
    x = rng.normal(size=(5, 3))
    y = rng.integers(1, 4, size=5)
    pos_l, pos_g = ul.loss_and_grad(model, x, y, ul.LossSpec("ce_hard"))
    neg_l, neg_g = ul.loss_and_grad(model, x, y, ul.LossSpec("neg_ce_hard"))
    assert neg_l == -pos_l
    assert np.array_equal(neg_g, -pos_g)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    cases = []
    for kind in ("linear", "mlp1"):
        for act in ("tanh", "relu"):
            cases.append((kind, act, "ce_hard", 0.0))
            cases.append((kind, act, "neg_ce_hard", 0.0))
            cases.append((kind, act, "ce_soft", 0.0))
            cases.append((kind, act, "kl_to_target", 0.0))
            cases.append((kind, act, "ce_hard", 0.01))
    for kind, act, loss_kind, gamma in cases:
        model = random_model(rng, kind=kind, d=3, k=3, h=4, activation=act)
        x = rng.normal(size=(4, 3))
        y = rng.integers(1, 4, size=4)
        q = rng.dirichlet(np.ones(3))
        needs_q = loss_kind in ("ce_soft", "kl_to_target")
        spec = ul.LossSpec(loss_kind, soft_target=q if needs_q else None,
                           l1_weight=gamma)
        labels = None if needs_q else y

        def loss_at(theta):
            return ul.loss_and_grad(model.with_theta(theta), x, labels, spec)[0]

        _, grad = ul.loss_and_grad(model, x, labels, spec)
        fd = fd_gradient(loss_at, model.theta)
        rel = np.abs(grad - fd) / np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-8)
        assert rel.max() < 1e-6, (kind, act, loss_kind, gamma, rel.max())


def test_l1_subgradient_is_zero_at_zero():
    rng = np.random.default_rng(9)
    model = random_model(rng, d=3, k=3)
    theta = model.theta.copy()
    theta[2] = 0.0
    model = model.with_theta(theta)
    x = rng.normal(size=(3, 3))
    y = rng.integers(1, 4, size=3)
    _, plain = ul.loss_and_grad(model, x, y, ul.LossSpec("ce_hard"))
    _, penal = ul.loss_and_grad(model, x, y, ul.LossSpec("ce_hard", l1_weight=0.5))
    diff = penal - plain
    assert diff[2] == 0.0
    nonzero = theta != 0.0
    assert np.allclose(diff[nonzero], 0.5 * np.sign(theta[nonzero]), atol=1e-15)


def test_loss_rejects_bad_inputs():
    rng = np.random.default_rng(10)
    model = random_model(rng, d=3, k=3)
    with pytest.raises(ValueError):
        ul.loss_and_grad(model, np.zeros((0, 3)), np.array([], dtype=int),
                         ul.LossSpec("ce_hard"))
    with pytest.raises(ValueError):
        ul.loss_and_grad(model, np.zeros((1, 3)), np.array([4]),
                         ul.LossSpec("ce_hard"))
    with pytest.raises(ValueError):
        ul.LossSpec("ce_soft")  # missing target
    with pytest.raises(ValueError):
        ul.LossSpec("ce_hard", l1_weight=-1.0)


# ---------------------------------------------------------------- sgd / train


def test_plain_sgd_step():
    model = ul.init_model(ul.ArchitectureSpec("linear", 1, 2), seed=0)
    model = model.with_theta(np.array([1.0, 1.0, 0.0, 0.0]))
    opt = ul.init_opt_state(model, lr=0.1, momentum=0.0)
    stepped, _ = ul.sgd_step(model, np.array([1.0, -2.0, 0.0, 0.0]), opt)
    assert np.array_equal(stepped.theta[:2], [0.9, 1.2])


def test_zero_gradient_is_fixed_point():
    rng = np.random.default_rng(11)
    model = random_model(rng, d=2, k=2)
    opt = ul.init_opt_state(model, lr=0.5, momentum=0.9)
    stepped, _ = ul.sgd_step(model, np.zeros_like(model.theta), opt)
    assert np.array_equal(stepped.theta, model.theta)


def test_momentum_accumulates_over_two_steps():
    model = ul.init_model(ul.ArchitectureSpec("linear", 1, 2), seed=0)
    model = model.with_theta(np.zeros(4))
    opt = ul.init_opt_state(model, lr=1.0, momentum=0.9)
    g = np.array([1.0, 0.0, 0.0, 0.0])
    m1, opt = ul.sgd_step(model, g, opt)
    m2, _ = ul.sgd_step(m1, g, opt)
    assert m1.theta[0] == -1.0
    assert abs(m2.theta[0] - (-2.9)) < 1e-15


def test_momentum_zero_is_plain_descent():
    rng = np.random.default_rng(12)
    model = random_model(rng, d=3, k=3)
    g = rng.normal(size=model.theta.size)
    opt = ul.init_opt_state(model, lr=0.3, momentum=0.0)
    stepped, _ = ul.sgd_step(model, g, opt)
    assert np.array_equal(stepped.theta, model.theta - 0.3 * g)


def test_sgd_rejects_nonfinite_gradient():
    rng = np.random.default_rng(13)
    model = random_model(rng, d=2, k=2)
    opt = ul.init_opt_state(model, lr=0.1, momentum=0.0)
    bad = np.zeros_like(model.theta)
    bad[0] = np.nan
    with pytest.raises(ValueError):
        ul.sgd_step(model, bad, opt)


def test_train_zero_epochs_is_identity(toy):
    cfg = ul.TrainConfig(epochs=0, batch_size=16, lr=0.1, seed=0)
    out = ul.train(toy.base, toy.pool, toy.train_idx, cfg)
    assert np.array_equal(out.theta, toy.base.theta)


def test_train_reaches_full_accuracy_on_separable_classes():
    gen = ul.GenSpec(num_classes=2, input_dim=4, samples_per_class=30,
                     centroid_scale=8.0, noise_sigma=0.5, seed=0)
    data = ul.generate_gaussian_mixture(gen)
    model = ul.init_model(ul.ArchitectureSpec("linear", 4, 2), seed=0)
    model = ul.train(model, data, np.arange(data.num_samples),
                     ul.TrainConfig(epochs=50, batch_size=8, lr=0.1, seed=0))
    assert ul.accuracy(model, data) == 100.0


def test_train_is_deterministic(toy):
    cfg = ul.TrainConfig(epochs=3, batch_size=16, lr=0.1, seed=21)
    a = ul.train(toy.base, toy.pool, toy.train_idx, cfg)
    b = ul.train(toy.base, toy.pool, toy.train_idx, cfg)
    assert np.array_equal(a.theta, b.theta)


def test_train_rejects_empty_indices(toy):
    with pytest.raises(ValueError):
        ul.train(toy.base, toy.pool, np.array([], dtype=int),
                 ul.TrainConfig(epochs=1, batch_size=4, lr=0.1))


# ------------------------------------------------------------------ checkpoint


def test_checkpoint_round_trip(tmp_path, toy):
    path = tmp_path / "model.ckpt"
    ul.save_checkpoint(toy.base, path)
    loaded = ul.load_checkpoint(path)
    assert loaded.arch == toy.base.arch
    assert loaded.init_seed == toy.base.init_seed
    assert np.array_equal(loaded.theta, toy.base.theta)


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text("not a checkpoint\n")
    with pytest.raises(ValueError):
        ul.load_checkpoint(path)


def test_checkpoint_rejects_truncated_theta(tmp_path, toy):
    path = tmp_path / "model.ckpt"
    ul.save_checkpoint(toy.base, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ValueError):
        ul.load_checkpoint(path)
