"""
Which words give the author away
================================

"""

# Importance of a word = how much the classifier's score for the true
# label drops when that word is deleted. Computing the drop for every
# position ranks the document's tokens by how much they leak.
from textveil.synth import SynthConfig, generate
from textveil.corpus import split_corpus, detokenize
from textveil.classify import LR_FEATURES, train_from_corpus, logit
from textveil.attack import omission_scores, select_targets

data = generate(SynthConfig(seed=4, authors_per_class=40))
train, test = split_corpus(data.substitute_corpus())
model, space = train_from_corpus(train.documents, LR_FEATURES, "logistic")

doc = test.documents[0]
y = doc.label
print("document:", detokenize(doc.tokens)[:70], "...")
print("label:", y, "| score for label:", f"{logit(model, space, doc, y):.4f}")

# Punctuation, mention sentinels, and hashtag markers are scored but
# never attacked; the attackable flag separates the two.
ranking = omission_scores(model, space, doc, y)
print(f"\n{'pos':>3}  {'word':<14} {'importance':>10}  attackable")
for i, token in enumerate(doc.tokens[:12]):
    print(
        f"{i:>3}  {token.surface:<14} {ranking.scores[i]:>10.4f}  "
        f"{ranking.attackable[i]}"
    )

# The attack visits positions in descending importance, capped at a
# budget of k targets.
order = select_targets(ranking, k=5)
print("\ntop-5 attack order:", list(order))
print("those words:", [doc.tokens[i].surface for i in order])
