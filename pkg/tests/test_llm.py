import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from conftest import config_response
from llmhpo.exceptions import AuthMissing, EndpointError, NoJsonFound, ReplayExhausted
from llmhpo.llm import (
    ChatRequest,
    HttpTransport,
    RecordTransport,
    ReplayTransport,
    SampleBatch,
    ask_for_json,
    collect_samples,
    extract_json_block,
)
from llmhpo.prompting import Message


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        srv = self.server
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        srv.seen.append((self.path, self.headers.get("Authorization"), body))
        status = srv.statuses.pop(0) if srv.statuses else 200
        if status == 200:
            payload = {"choices": [{"message": {"role": "assistant", "content": srv.reply}}]}
        else:
            payload = {"error": "busy"}
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    srv.seen, srv.statuses, srv.reply = [], [], config_response()
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _url(srv):
    return f"http://127.0.0.1:{srv.server_address[1]}/v1"


def _request():
    return ChatRequest([Message("system", "s"), Message("user", "u")], "gpt-4", 0.0)


def test_http_round_trip(server):
    t = HttpTransport(_url(server), "sekrit")
    assert t.send(_request()) == server.reply
    path, auth, body = server.seen[0]
    assert path == "/v1/chat/completions"
    assert auth == "Bearer sekrit"
    assert body["model"] == "gpt-4" and body["temperature"] == 0.0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]


def test_http_retries_transient(server):
    server.statuses = [429, 503]
    sleeps = []
    t = HttpTransport(_url(server), "k", sleep=sleeps.append)
    assert t.send(_request()) == server.reply
    assert sleeps == [1.0, 2.0]
    assert len(server.seen) == 3


def test_http_gives_up_after_retries(server):
    server.statuses = [500] * 10
    sleeps = []
    t = HttpTransport(_url(server), "k", sleep=sleeps.append)
    with pytest.raises(EndpointError) as err:
        t.send(_request())
    assert err.value.status == 500
    assert sleeps == [1.0, 2.0, 4.0]
    assert len(server.seen) == 4


def test_http_does_not_retry_client_errors(server):
    server.statuses = [400]
    t = HttpTransport(_url(server), "k", sleep=lambda s: None)
    with pytest.raises(EndpointError):
        t.send(_request())
    assert len(server.seen) == 1


def test_missing_key_fails_before_network(server):
    t = HttpTransport.from_env({"LLMHPO_API_URL": _url(server)})
    with pytest.raises(AuthMissing):
        t.send(_request())
    assert server.seen == []


def test_record_then_replay(server, tmp_path):
    rec = RecordTransport(HttpTransport(_url(server), "k"), tmp_path / "fx")
    first = rec.send(_request())
    server.reply = "second answer\r\nwith CRLF"
    second = rec.send(_request())
    replay = ReplayTransport(tmp_path / "fx")
    assert replay.send(_request()) == first
    assert replay.send(_request()) == second


def test_replay_is_byte_exact_and_exhausts(make_fixtures):
    d = make_fixtures(["a\r\n", "b"])
    t = ReplayTransport(d)
    assert t.send(_request()) == "a\r\n"
    assert t.send(_request()) == "b"
    with pytest.raises(ReplayExhausted):
        t.send(_request())


@pytest.mark.parametrize(
    "raw,expected",
    [
        ('{"a": 1}', '{"a": 1}'),
        ('Sure! ```json\n{"a": {"b": 2}}\n``` done', '{"a": {"b": 2}}'),
        ('pre {"s": "brace } inside"} post', '{"s": "brace } inside"}'),
        ('``` \nno json here\n```\nthen {"x": 1}', '{"x": 1}'),
        ('{"q": "escaped \\" quote {"}', '{"q": "escaped \\" quote {"}'),
    ],
)
def test_extract_json_block(raw, expected):
    assert extract_json_block(raw) == expected


def test_extract_json_block_none():
    with pytest.raises(NoJsonFound):
        extract_json_block("I would suggest a learning rate of 0.01.")


def test_collect_samples_records_failures(make_fixtures, security_usecase):
    d = make_fixtures([
        config_response(),
        "no json at all",
        config_response(learning_rate=-1),
        '{"lr": 0.5, "momentum": 0.9, "batch_size": 32, "num_epochs": 3, "gamma": 0.1,'
        ' "step_size": 7, "extra": 1}',
    ])
    batch = collect_samples(ReplayTransport(d), security_usecase, 5)
    assert len(batch) == 5
    assert [s.ok for s in batch.samples] == [True, False, False, True, False]
    codes = [s.failure.code for s in batch.failures]
    assert codes == ["NoJsonFound", "InvalidValue", "ReplayExhausted"]
    assert batch.samples[3].config.learning_rate == 0.5
    assert any("extra" in w for w in batch.samples[3].warnings)


def test_collect_samples_auth_missing_aborts(security_usecase):
    with pytest.raises(AuthMissing):
        collect_samples(HttpTransport(None, None), security_usecase, 3)


def test_sample_batch_jsonl_round_trip(make_fixtures, security_usecase, tmp_path):
    d = make_fixtures([config_response(momentum=0.5), "oops", config_response()])
    batch = collect_samples(ReplayTransport(d), security_usecase, 3)
    path = tmp_path / "s.jsonl"
    batch.write(path)
    back = SampleBatch.read(path)
    assert back.samples == batch.samples
    assert back.messages == batch.messages
    assert back.to_jsonl() == batch.to_jsonl()


def test_parallel_collection_keeps_index_order(make_fixtures, security_usecase):
    responses = [config_response(batch_size=b) for b in range(1, 21)]
    d = make_fixtures(responses)
    batch = collect_samples(ReplayTransport(d), security_usecase, 20, parallel=4)
    assert [s.index for s in batch.samples] == list(range(20))
    assert sorted(c.batch_size for c in batch.configs) == list(range(1, 21))


def test_ask_for_json(make_fixtures):
    d = make_fixtures(['Answer:\n```json\n{"k": [1, 2]}\n```'])
    out = ask_for_json(ReplayTransport(d), [Message("user", "q")])
    assert json.loads(out) == {"k": [1, 2]}
