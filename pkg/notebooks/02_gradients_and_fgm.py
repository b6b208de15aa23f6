# %% [markdown]
# # Embedding gradients and FGM perturbations
#
# The classifier exposes the gradient of the loss with respect to the embedded
# sequence. FGM moves the embeddings a distance epsilon against the
# log-likelihood gradient.

# %%
import numpy as np

from advtext.advtrain import adversarial_loss, adversarial_perturbation
from advtext.textmodel import bce_loss, build_vocab, encode, forward, forward_embedded, init_params, backward

vocab = build_vocab(["new cases confirmed in ohio", "lol this is a joke", "cases rising"], min_freq=1)
params = init_params(len(vocab), d=8, max_len=8, seed=0)
ids = encode("new cases confirmed in ohio", vocab, 8)
print("ids", ids)

trace = forward(params, ids)
grads = backward(params, trace, 1)
print("p(informative) =", float(trace.prob))

# %% [markdown]
# Finite-difference check of one embedding-gradient entry.

# %%
h = 1e-4
X = trace.embedded.copy()
X[0, 0] += h
up = bce_loss(forward_embedded(params, X[None], trace.mask[None]).prob[0], 1)
X[0, 0] -= 2 * h
down = bce_loss(forward_embedded(params, X[None], trace.mask[None]).prob[0], 1)
print("analytic", grads.wrt_embedded[0, 0], "numeric", (up - down) / (2 * h))

# %% [markdown]
# The log-likelihood gradient is the negated loss gradient. The perturbation
# has norm epsilon and lowers the likelihood of the true label.

# %%
g = -grads.wrt_embedded
for eps in (0.01, 0.1, 1.0):
    z = adversarial_perturbation(g, eps)
    loss, _ = adversarial_loss(params, ids, 1, z)
    print(f"eps={eps:<5} |z|={np.linalg.norm(z.wrt_embedded):.3f} clean loss={bce_loss(trace.prob, 1):.5f} adv loss={loss:.5f}")
