"""
Rewriting a document until the classifier flips
===============================================

"""

# The greedy attack walks the most important positions, tries candidate
# replacements, and keeps any edit that strictly lowers the score for
# the true label. The synthetic embedding store plants a near-synonym
# for every marker word, so the "ws" generator has somewhere to go.
from textveil.synth import SynthConfig, generate
from textveil.corpus import split_corpus, detokenize, sample_attack_set
from textveil.classify import LR_FEATURES, train_from_corpus, logit, predict
from textveil.attack import AttackConfig, AttackProviders, run_attack

data = generate(SynthConfig(seed=4, authors_per_class=40))
train, test = split_corpus(data.substitute_corpus())
model, space = train_from_corpus(train.documents, LR_FEATURES, "logistic")
providers = AttackProviders(embeddings=data.store)

doc = sample_attack_set(test, 5)[0]
y = doc.label
print("before:", detokenize(doc.tokens)[:70], "...")
print("prediction:", predict(model, space, doc), "| score:", f"{logit(model, space, doc, y):.4f}")

# Every accepted edit is streamed to the callback with the score after
# the edit, so a UI (or this demo) can watch the attack converge.
config = AttackConfig(generator="ws", mode="loop_nocheck", seed=7)
events = []
result = run_attack(model, space, doc, y, config, providers, events.append)

print(f"\n{len(result.edits)} edits, {result.queries} queries to the substitute:")
for event in events:
    print(
        f"  {event.edit.original:>12} -> {event.edit.replacement:<12}"
        f" score {event.logit_after:+.4f}"
        f"{'  FLIPPED' if event.flipped else ''}"
    )

print("\nafter: ", detokenize(result.document.tokens)[:70], "...")
print("prediction:", predict(model, space, result.document))

# The same edits replay onto the original document, which is how stored
# attack results are verified later.
from textveil.attack import apply_edits

assert apply_edits(doc, result.edits).tokens == result.document.tokens
print("replay check: ok")
