"""Shared test configuration.

Every test runs with outbound sockets disabled: the suite must be fully
offline (stub provider, in-process HTTP client), and anything that tries to
reach the network fails loudly instead of silently depending on it.
"""

import socket

import pytest


class NetworkBlockedError(RuntimeError):
    pass


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    def _blocked(self, *args, **kwargs):
        raise NetworkBlockedError(
            "a test attempted outbound network access")

    monkeypatch.setattr(socket.socket, "connect", _blocked)
    monkeypatch.setattr(socket.socket, "connect_ex", _blocked)
    monkeypatch.setattr(socket, "create_connection", _blocked)
    yield
