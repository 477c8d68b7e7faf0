from __future__ import annotations

import json

import pytest

from relgate.gateway import (
    BackendConfig,
    ChatRequest,
    CredentialError,
    Fixture,
    HttpBackend,
    NoFixtureError,
    SamplingError,
    ScriptedBackend,
    TransportError,
    backend_from_config,
    complete,
    complete_n,
    load_fixtures,
)


def req(text: str = "tell me about release candidate RC7") -> ChatRequest:
    return ChatRequest(system_prompt="sys", messages=(("user", text),))


class TestChatRequest:
    def test_empty_messages_rejected(self):
        with pytest.raises(ValueError):
            ChatRequest(system_prompt="s", messages=())

    def test_temperature_bounds(self):
        with pytest.raises(ValueError):
            ChatRequest(system_prompt="s", messages=(("user", "x"),),
                        temperature=2.5)

    def test_last_user_message(self):
        r = ChatRequest(system_prompt="s", messages=(
            ("user", "first"), ("assistant", "mid"), ("user", "last")))
        assert r.last_user_message == "last"


class TestScripted:
    def test_substring_match_passthrough(self):
        backend = ScriptedBackend((Fixture(match="release candidate",
                                           response="hello"),))
        resp = complete(req(), backend)
        assert resp.text == "hello"
        assert resp.latency_s >= 0

    def test_no_match_names_message(self):
        backend = ScriptedBackend((Fixture(match="zebra", response="x"),))
        with pytest.raises(NoFixtureError, match="release candidate"):
            complete(req(), backend)

    def test_fixtures_consumed_in_order(self):
        backend = ScriptedBackend((
            Fixture(match="RC7", response="first"),
            Fixture(match="RC7", response="second"),
        ))
        assert complete(req(), backend).text == "first"
        assert complete(req(), backend).text == "second"
        with pytest.raises(NoFixtureError):
            complete(req(), backend)

    def test_regex_matcher(self):
        backend = ScriptedBackend((
            Fixture(match=r"RC\d+", regex=True, response="matched"),
        ))
        assert complete(req(), backend).text == "matched"

    def test_skips_non_matching_fixture(self):
        backend = ScriptedBackend((
            Fixture(match="unrelated", response="a"),
            Fixture(match="RC7", response="b"),
        ))
        assert complete(req(), backend).text == "b"
        assert backend.remaining == 1


class TestCompleteN:
    def test_order_preserved(self):
        backend = ScriptedBackend((
            Fixture(match="RC7", response="A"),
            Fixture(match="RC7", response="A"),
            Fixture(match="RC7", response="B"),
        ))
        out = complete_n(req(), 3, 3, backend)
        assert [r.text for r in out] == ["A", "A", "B"]

    def test_n1_equals_complete(self):
        b1 = ScriptedBackend((Fixture(match="RC7", response="only"),))
        b2 = ScriptedBackend((Fixture(match="RC7", response="only"),))
        assert complete_n(req(), 1, 1, b1)[0].text == complete(req(), b2).text

    def test_timeout_sample_fails_all(self):
        backend = ScriptedBackend((
            Fixture(match="RC7", response="ok"),
            Fixture(match="RC7", error="timeout"),
            Fixture(match="RC7", response="ok"),
        ))
        with pytest.raises(SamplingError) as err:
            complete_n(req(), 3, 3, backend)
        assert any(i == 1 for i, _ in err.value.failures)

    def test_bad_arguments(self):
        backend = ScriptedBackend(())
        with pytest.raises(ValueError):
            complete_n(req(), 0, 1, backend)
        with pytest.raises(ValueError):
            complete_n(req(), 1, 0, backend)


class _FakeResponse:
    def __init__(self, status_code: int, body: dict | None = None):
        self.status_code = status_code
        self._body = body or {}
        self.text = json.dumps(self._body)

    def json(self):
        return self._body


class _FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls: list[dict] = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        return self.responses.pop(0)


HTTP_CONFIG = BackendConfig(
    kind="http", endpoint="https://llm.internal/v1/chat",
    credential_env="RELGATE_TEST_KEY", model="test-model",
    max_retries_transport=1,
)


class TestHttp:
    def test_missing_credential_fails_before_network(self, monkeypatch):
        monkeypatch.delenv("RELGATE_TEST_KEY", raising=False)

        class ExplodingSession:
            def post(self, *a, **k):
                raise AssertionError("network must not be touched")

        backend = HttpBackend(HTTP_CONFIG, session=ExplodingSession())
        with pytest.raises(CredentialError, match="RELGATE_TEST_KEY"):
            backend.complete(req())

    def test_success_parses_openai_shape(self, monkeypatch):
        monkeypatch.setenv("RELGATE_TEST_KEY", "sk-secret-value")
        session = _FakeSession([_FakeResponse(200, {
            "choices": [{"message": {"content": "plan text"}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5},
        })])
        backend = HttpBackend(HTTP_CONFIG, session=session)
        resp = backend.complete(req())
        assert resp.text == "plan text"
        assert resp.token_usage == {"prompt_tokens": 10, "completion_tokens": 5}
        sent = session.calls[0]["json"]
        assert sent["messages"][0]["role"] == "system"

    def test_retries_5xx_then_succeeds(self, monkeypatch):
        monkeypatch.setenv("RELGATE_TEST_KEY", "sk-secret-value")
        session = _FakeSession([
            _FakeResponse(500),
            _FakeResponse(200, {"choices": [{"message": {"content": "ok"}}]}),
        ])
        backend = HttpBackend(HTTP_CONFIG, session=session)
        assert backend.complete(req()).text == "ok"
        assert len(session.calls) == 2

    def test_exhausted_retries(self, monkeypatch):
        monkeypatch.setenv("RELGATE_TEST_KEY", "sk-secret-value")
        session = _FakeSession([_FakeResponse(503), _FakeResponse(503)])
        backend = HttpBackend(HTTP_CONFIG, session=session)
        with pytest.raises(TransportError, match="exhausted"):
            backend.complete(req())

    def test_4xx_is_not_retried(self, monkeypatch):
        monkeypatch.setenv("RELGATE_TEST_KEY", "sk-secret-value")
        session = _FakeSession([_FakeResponse(401)])
        backend = HttpBackend(HTTP_CONFIG, session=session)
        with pytest.raises(TransportError, match="401"):
            backend.complete(req())
        assert len(session.calls) == 1

    def test_secret_never_in_config_serialization(self, monkeypatch):
        secret = "sk-super-secret-do-not-leak"
        monkeypatch.setenv("RELGATE_TEST_KEY", secret)
        assert secret not in repr(HTTP_CONFIG)
        assert secret not in json.dumps(HTTP_CONFIG.__dict__, default=str)


class TestConfig:
    def test_http_requires_endpoint_and_credential(self):
        with pytest.raises(ValueError):
            BackendConfig(kind="http")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            BackendConfig(kind="oracle")

    def test_fixture_file_round_trip(self, tmp_path):
        path = tmp_path / "fx.json"
        path.write_text(json.dumps([
            {"match": "a", "response": "ra"},
            {"match": "b.*c", "regex": True, "response": "rb"},
            {"match": "d", "error": "timeout"},
        ]))
        fixtures = load_fixtures(path)
        assert fixtures[0] == Fixture(match="a", response="ra")
        assert fixtures[1].regex is True
        assert fixtures[2].error == "timeout"
        backend = backend_from_config(
            BackendConfig(kind="scripted", fixtures_path=str(path)))
        assert isinstance(backend, ScriptedBackend)
        assert backend.remaining == 3

    def test_bad_fixture_file(self, tmp_path):
        path = tmp_path / "fx.json"
        path.write_text('[{"response": "missing match"}]')
        with pytest.raises(ValueError, match="match"):
            load_fixtures(path)
