"""Attention pooling over one sentence.

A sentence encoder with r=2 context vectors; prints the attention matrix A
and checks that zeroing U_s turns pooling into a plain mean.
"""

import numpy as np

from hsln.embeddings import Vocabulary, embed, random_table
from hsln.encoder import AttentionPooling, attention_pool, encode_rnn
from hsln.nn import BiRNN

rng = np.random.default_rng(0)
tokens = ["we", "enrolled", "85", "patients", "."]
vocab = Vocabulary(tokens)
table = random_table(vocab, 16, seed=0)

e = embed(tokens, table, vocab)
print("E:", e.shape)  # (d_w, N)

rnn = BiRNN(16, 8, rng)
h = encode_rnn(e, rnn)
print("H:", h.shape)  # (2 d_hs, N)

attn = AttentionPooling(h.shape[0], d_a=10, r=2, rng=rng)
s, a = attention_pool(h, attn, return_weights=True)
print("s:", s.shape)  # (r * 2 d_hs,)

np.set_printoptions(precision=3, suppress=True)
print("A (rows sum to one):")
for row in a.data:
    print("  ", " ".join(f"{tok}:{w:.2f}" for tok, w in zip(tokens, row)), "| sum", row.sum())

attn.params["U_s"].data[...] = 0
s0 = attention_pool(h, attn).data.reshape(2, -1)
print("U_s = 0 gives the mean of H:", np.allclose(s0[0], h.data.mean(axis=1), atol=1e-6))

