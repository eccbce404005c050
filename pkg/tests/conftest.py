"""Shared fixtures: small synthetic data, trained models, a live toy server."""
from __future__ import annotations

import pytest

from textveil.attack import AttackProviders
from textveil.classify import LR_FEATURES, train_from_corpus
from textveil.corpus import Document, Token, split_corpus
from textveil.lm_bridge import Client, ToyLanguageModel, start_server
from textveil.synth import SynthConfig, generate


def make_doc(words, label=None, author="t"):
    """A document of plain word tokens; the workhorse of most tests."""
    return Document.from_tokens(author, tuple(Token(w) for w in words), label)


@pytest.fixture(scope="session")
def small_synth():
    # Small but learnable: 40 authors x 10 tweets per corpus side.
    return generate(SynthConfig(seed=11, authors_per_class=20, tweets_per_author=10))


@pytest.fixture(scope="session")
def substitute_model(small_synth):
    corpus = small_synth.substitute_corpus()
    train, _ = split_corpus(corpus)
    return train_from_corpus(train.documents, LR_FEATURES, "logistic")


@pytest.fixture(scope="session")
def toy_model(small_synth):
    return ToyLanguageModel(small_synth.vocabulary())


@pytest.fixture(scope="session")
def toy_server(toy_model):
    server = start_server(toy_model)
    yield server
    server.shutdown()


@pytest.fixture
def toy_client(toy_server):
    client = Client.connect(toy_server.endpoint)
    yield client
    client.close()


@pytest.fixture(scope="session")
def attack_providers(small_synth, toy_model):
    return AttackProviders(embeddings=small_synth.store, lm=toy_model)
