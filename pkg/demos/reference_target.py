"""How the guided unlearner builds its per-batch soft target.

Trains a small model on a Gaussian mixture, then walks through the
target construction for one forget batch: class histogram, rescaling to
the matched sample count, held-out sampling, and the averaged reference
prediction q.  Shows why single-row batches give a class-conditional
target while large batches blur toward the label prior.
"""

from dataclasses import replace

import numpy as np

import unlearnlab as ul


def show_vector(name, v):
    print(f"  {name:18s} [" + " ".join(f"{x:.3f}" for x in v) + "]")


def main():
    gen = ul.GenSpec(num_classes=4, input_dim=8, samples_per_class=60,
                     centroid_scale=3.0, noise_sigma=1.0, seed=0)
    pool = ul.generate_gaussian_mixture(gen)
    test = ul.generate_gaussian_mixture(replace(gen, seed=1))
    splits = ul.make_splits(pool, test, forget_fraction=0.1, seed=0)

    arch = ul.ArchitectureSpec("mlp1", 8, 4, hidden_dim=32, activation="tanh")
    train_rows = np.sort(np.concatenate([splits.forget, splits.retain]))
    model = ul.train(ul.init_model(arch, seed=3), pool, train_rows,
                     ul.TrainConfig(epochs=30, batch_size=16, lr=0.1, seed=5))
    print(f"model: train acc {ul.accuracy(model, pool, train_rows):.1f}, "
          f"test acc {ul.accuracy(model, test):.1f}")
    print(f"splits: held_out {splits.held_out.size}, forget {splits.forget.size}, "
          f"retain {splits.retain.size}\n")

    rng = np.random.default_rng(0)
    batch = splits.forget
    labels = pool.labels[batch]
    print(f"forget batch: all {batch.size} forget rows")
    hist = ul.class_histogram(labels, 4)
    print(f"  class histogram    {hist.tolist()}")
    matched = ul.match_histogram(hist, int(hist.sum()), 12)
    print(f"  matched to 12 rows {matched.tolist()} "
          f"(largest remainder, zeros preserved)")

    q = ul.build_refdist(labels, pool, splits.held_out, model,
                         ul.RefDistConfig(num_matched=12), rng=rng)
    show_vector("batch target q", q)
    prior = ul.class_histogram(pool.labels[train_rows], 4) / train_rows.size
    show_vector("label prior", prior)

    print("\nsingle-row batches instead:")
    for row in batch[:4]:
        lab = pool.labels[row]
        q1 = ul.build_refdist([lab], pool, splits.held_out, model,
                              ul.RefDistConfig(num_matched=12), rng=rng)
        show_vector(f"q for a class-{lab} row", q1)
    print("\nA whole batch mixes classes, so its q approaches the label")
    print("prior; a single-row batch keeps q concentrated on the row's")
    print("own class, which is what the reference model predicts for")
    print("unseen data of that class.")


if __name__ == "__main__":
    main()
