"""Train the tiny preset on a grammar-generated corpus.

Every abstract runs BACKGROUND > OBJECTIVE > METHODS > RESULTS > CONCLUSIONS
with some labels repeated. After training, the learned transition matrix
should favour exactly that order. Takes about a minute on one core.
"""

from hsln.config import preset
from hsln.crf import best_transition_path, export_transitions
from hsln.metrics import format_report
from hsln.synthetic import canonical_spec, generate_splits
from hsln.trainer import evaluate_model, train

train_c, val_c, test_c = generate_splits(500, 100, 100, seed=0, spec=canonical_spec())
print(len(train_c), "training abstracts,", train_c.n_sentences, "sentences")
print("first abstract:")
first = train_c.abstracts[0]
for y, text in zip(first.labels, first.texts):
    print(f"  {train_c.label_set[y]:<12} {text}")

cfg = preset("tiny-rnn")
ckpt = train(cfg, train_c, val_c)
for h in ckpt.history:
    print(f"epoch {h['epoch']:2d}  lr {h['lr']:.5f}  loss {h['train_loss']:7.3f}  val F1 {100 * h['val_weighted_f1']:.1f}")
print("selected epoch", ckpt.epoch)

model = ckpt.to_model()
print(format_report(evaluate_model(model, test_c, ckpt.vocab)))

t = ckpt.params["crf.T"]
print(export_transitions(t, ckpt.label_set))
print("best 5-step path under T alone:", [ckpt.label_set[k] for k in best_transition_path(t, 5)])
