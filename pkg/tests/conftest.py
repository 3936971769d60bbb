"""Shared fixtures: mini corpus, built graph, deterministic mock endpoint."""

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from linkqa.graph import build_graph
from linkqa.ingest import ingest_corpus

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def mini_corpus_path() -> Path:
    return FIXTURES / "mini_corpus.jsonl"


@pytest.fixture(scope="session")
def manifest() -> dict:
    return json.loads((FIXTURES / "mini_corpus_manifest.json").read_text())


@pytest.fixture(scope="session")
def mini_documents(mini_corpus_path):
    documents = []
    with open(mini_corpus_path, "r", encoding="utf-8") as fh:
        ingest_corpus(fh, documents.append)
    return documents


@pytest.fixture(scope="session")
def mini_graph(mini_documents):
    graph, _ = build_graph(mini_documents)
    return graph


def deterministic_completion(prompt: str) -> str:
    """A valid-looking QA block derived only from the prompt bytes."""
    digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
    filler = " ".join(f"fact-{digest}-{i}" for i in range(24))
    return (
        f"Question: Which linked subjects does record {digest} connect, and what "
        f"shared thread runs between the two articles involved?\n"
        f"Answer: The first subject anchors the relation while the second one extends "
        f"it across the corpus. Supporting details: {filler}. "
        f"Therefore, the connection is {digest}."
    )


class _MockChatHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        self.server.requests.append(body)
        prompt = body["messages"][0]["content"]
        payload = {
            "choices": [
                {
                    "message": {"content": deterministic_completion(prompt)},
                    "finish_reason": "stop",
                }
            ]
        }
        data = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def mock_endpoint():
    """In-process chat-completions server returning deterministic text."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _MockChatHandler)
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    try:
        yield url, server
    finally:
        server.shutdown()
        thread.join(timeout=5)
