"""
Training the substitute and target classifiers
==============================================

"""

# The toolkit ships a synthetic corpus generator so the whole pipeline
# runs without any private data. Two corpora are drawn from the same
# vocabulary: one for the attacker's substitute model, one for the
# defender's target model. delta_shift controls how far apart the two
# distributions sit.
from textveil.synth import SynthConfig, generate
from textveil.corpus import split_corpus
from textveil.classify import LR_FEATURES, NGRAM_FEATURES, train_from_corpus
from textveil.evaluation import accuracy, chance_level

data = generate(SynthConfig(seed=4, authors_per_class=40, delta_shift=0.3))
sub_train, sub_test = split_corpus(data.substitute_corpus())
tt_train, tt_test = split_corpus(data.target_corpus())
print(f"substitute: {len(sub_train.documents)} train / {len(sub_test.documents)} test")
print(f"target:     {len(tt_train.documents)} train / {len(tt_test.documents)} test")

# The substitute is a logistic regression on tf-idf uni/bigrams; the
# target is a linear SVM over a much wider feature set (word 1-2-grams
# plus character 3-5-grams), standing in for an unknown architecture.
sub_model, sub_space = train_from_corpus(sub_train.documents, LR_FEATURES, "logistic")
tgt_model, tgt_space = train_from_corpus(tt_train.documents, NGRAM_FEATURES, "hinge")
print(f"\nsubstitute features: {sub_space.size}")
print(f"target features:     {tgt_space.size}")

# Both models should comfortably beat chance on their own held-out data.
print(f"\nchance level:          {chance_level(sub_test.documents):.3f}")
print(f"substitute held-out:   {accuracy(sub_model, sub_space, sub_test.documents):.3f}")
print(f"target held-out:       {accuracy(tgt_model, tgt_space, tt_test.documents):.3f}")

# Cross-corpus accuracy is the transfer picture before any attack: the
# substitute still does well on target data, which is exactly why
# attacks fitted on it carry over.
print(f"substitute on target:  {accuracy(sub_model, sub_space, tt_test.documents):.3f}")

# The most positive and most negative weights are the planted marker
# words, which is what a stylometric attacker would hope to see.
import numpy as np

keys = sorted(sub_space.index, key=sub_space.index.get)
order = np.argsort(sub_model.weights)
show = [keys[i] for i in order[:3]] + [keys[i] for i in order[-3:]]
print("\nextreme features:", [k[1] for k in show])
