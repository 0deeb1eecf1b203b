"""Linear-chain CRF on a three-sentence toy abstract.

Scores every label path explicitly, then checks the forward algorithm and
Viterbi against the enumeration.
"""

import itertools

import numpy as np

from hsln.crf import log_partition, nll_loss, viterbi_decode
from hsln.tensor import Tensor, reference_mode

labels = ["BACKGROUND", "METHODS", "RESULTS"]

# emission scores: one row per sentence, one column per label
r = np.array([[2.0, 0.5, 0.1],
              [0.3, 1.5, 1.4],
              [0.1, 1.2, 1.3]])

# transitions, row = previous label, column = next label
t = np.array([[0.5, 1.0, -1.0],
              [-2.0, 0.2, 1.0],
              [-2.0, -1.0, 0.3]])

paths = list(itertools.product(range(3), repeat=3))
scores = np.array([r[[0, 1, 2], list(y)].sum() + t[y[0], y[1]] + t[y[1], y[2]] for y in paths])
probs = np.exp(scores - scores.max())
probs /= probs.sum()

for k in np.argsort(-scores)[:5]:
    print(" > ".join(labels[i][:3] for i in paths[k]), f"score={scores[k]:.2f} p={probs[k]:.3f}")

with reference_mode():
    log_z = float(log_partition(Tensor(r), Tensor(t)).data)
print("log Z (forward)   ", round(log_z, 6))
print("log Z (enumerated)", round(float(scores.max() + np.log(np.exp(scores - scores.max()).sum())), 6))

best = viterbi_decode(r, t)
print("viterbi:", [labels[i] for i in best])

# sentence 2 prefers METHODS, sentence 3 is nearly tied; the transitions
# push the last sentence towards RESULTS
gold = [0, 1, 2]
print("nll of gold path:", round(float(nll_loss(r, gold, t).data), 4),
      "= -log", round(probs[paths.index(tuple(gold))], 4))
