"""Finite-difference audit of every loss gradient the library exposes.

Draws random models, batches, and loss settings, then compares the
analytic gradient of loss_and_grad against central differences of the
loss value.  Run: python demos/gradient_check.py [--draws N]
"""

import argparse

import numpy as np

import unlearnlab as ul

LOSS_KINDS = ("ce_hard", "neg_ce_hard", "ce_soft", "kl_to_target")


def random_case(rng):
    if rng.random() < 0.5:
        arch = ul.ArchitectureSpec("linear", 4, 3)
    else:
        arch = ul.ArchitectureSpec("mlp1", 4, 3, hidden_dim=6,
                                   activation=("tanh", "relu")[int(rng.integers(2))])
    model = ul.init_model(arch, seed=int(rng.integers(1 << 30)))
    model = model.with_theta(rng.normal(scale=0.6, size=model.theta.size))
    n = int(rng.integers(1, 7))
    x = rng.normal(size=(n, 4))
    y = rng.integers(1, 4, size=n)
    kind = LOSS_KINDS[int(rng.integers(len(LOSS_KINDS)))]
    q = rng.dirichlet(np.ones(3))
    soft = kind in ("ce_soft", "kl_to_target")
    spec = ul.LossSpec(kind, soft_target=q if soft else None)
    return model, x, (None if soft else y), spec


def central_difference(model, x, y, spec, h=1e-5):
    fd = np.empty_like(model.theta)
    for i in range(model.theta.size):
        up, down = model.theta.copy(), model.theta.copy()
        up[i] += h
        down[i] -= h
        lu, _ = ul.loss_and_grad(model.with_theta(up), x, y, spec)
        ld, _ = ul.loss_and_grad(model.with_theta(down), x, y, spec)
        fd[i] = (lu - ld) / (2 * h)
    return fd


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=25)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    by_kind = {}
    for _ in range(args.draws):
        model, x, y, spec = random_case(rng)
        _, grad = ul.loss_and_grad(model, x, y, spec)
        fd = central_difference(model, x, y, spec)
        rel = np.abs(grad - fd) / np.maximum(
            np.maximum(np.abs(grad), np.abs(fd)), 1e-8)
        err = float(rel.max())
        worst = max(worst, err)
        by_kind[spec.kind] = max(by_kind.get(spec.kind, 0.0), err)
        print(f"{spec.kind:13s} {model.arch.kind:6s} batch {x.shape[0]}  "
              f"max rel err {err:.2e}")

    print()
    for kind in sorted(by_kind):
        print(f"worst {kind:13s} {by_kind[kind]:.2e}")
    print(f"overall worst  {worst:.2e}  "
          f"({'ok' if worst < 1e-6 else 'SUSPECT'} at tolerance 1e-6)")


if __name__ == "__main__":
    main()
