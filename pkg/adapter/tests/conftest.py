"""Shared fixtures: one miniature checkpoint, one provider, one live server."""
from __future__ import annotations

import pytest

from textveil.lm_bridge import Client, start_server
from textveil_adapter import AdapterConfig, MaskedLMProvider, build_miniature

try:
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()
    hf_logging.set_verbosity_error()
except Exception:
    pass


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    out = tmp_path_factory.mktemp("checkpoint") / "miniature"
    return build_miniature(out, seed=0)


@pytest.fixture(scope="session")
def provider(checkpoint):
    return MaskedLMProvider(AdapterConfig(model=str(checkpoint)))


@pytest.fixture(scope="session")
def server(provider):
    srv = start_server(provider)
    yield srv
    srv.shutdown()


@pytest.fixture
def connect(server):
    """Fresh ready client factory, the shape the conformance suite wants."""
    return lambda: Client.connect(server.endpoint, timeout=15)
