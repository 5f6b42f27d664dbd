"""Synthetic-data builders and an in-process HTTP backend for the tests."""

from __future__ import annotations

import json
import random
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from medsum.backends import SummarizeRequest
from medsum.records import SummaryRecord
from medsum.transcript import Conversation, SpeakerRole, Turn

WORD_POOL = (
    "fever cough pain chest breath shortness nausea dizzy headache rash "
    "patient denies reports states feels since days weeks onset mild severe "
    "worse better medication dose taking morning night sleep appetite weight "
    "pressure heart lungs clear stomach back left right arm leg history visit"
).split()


def sentenceful_text(rng: random.Random, n_words: int) -> str:
    """n_words words arranged into short capitalized sentences ending in periods."""
    words = [rng.choice(WORD_POOL) for _ in range(n_words)]
    sentences = []
    i = 0
    while i < len(words):
        length = min(rng.randint(4, 12), len(words) - i)
        chunk = words[i : i + length]
        sentences.append(chunk[0].capitalize() + " " + " ".join(chunk[1:]) + "." if len(chunk) > 1 else chunk[0].capitalize() + ".")
        i += length
    return " ".join(sentences)


def plain_text(rng: random.Random, n_words: int) -> str:
    """n_words pool words with no punctuation (one sentence to the splitter)."""
    return " ".join(rng.choice(WORD_POOL) for _ in range(n_words))


def make_conversation(conv_id: str, turn_word_counts, rng=None, speakers=None, style="sentences") -> Conversation:
    """A conversation whose i-th turn has exactly turn_word_counts[i] words."""
    rng = rng or random.Random(0)
    text_fn = sentenceful_text if style == "sentences" else plain_text
    turns = []
    for i, n_words in enumerate(turn_word_counts):
        role = speakers[i] if speakers else (SpeakerRole.DOCTOR if i % 2 == 0 else SpeakerRole.PATIENT)
        turns.append(Turn(speaker=role, text=text_fn(rng, n_words)))
    return Conversation(id=conv_id, turns=tuple(turns))


def random_conversation(
    rng: random.Random,
    conv_id: str,
    min_turns: int = 5,
    max_turns: int = 400,
    min_words: int = 1,
    max_words: int = 60,
) -> Conversation:
    n_turns = rng.randint(min_turns, max_turns)
    counts = [rng.randint(min_words, max_words) for _ in range(n_turns)]
    return make_conversation(conv_id, counts, rng=rng)


def conversation_with_word_total(rng: random.Random, conv_id: str, total_words: int,
                                 min_turn_words: int = 25, max_turn_words: int = 60) -> Conversation:
    """A conversation whose turn words sum to approximately total_words."""
    counts = []
    remaining = total_words
    while remaining > 0:
        take = min(rng.randint(min_turn_words, max_turn_words), remaining)
        counts.append(take)
        remaining -= take
    return make_conversation(conv_id, counts, rng=rng)


def make_reference(conv_id: str, annotator: str, rng: random.Random, n_sentences: int = 4) -> SummaryRecord:
    text = " ".join(sentenceful_text(rng, rng.randint(6, 14)) for _ in range(n_sentences))
    return SummaryRecord(conv_id=conv_id, origin=annotator, text=text)


class MockHttpServer:
    """Minimal threaded HTTP server speaking the summarize/embed wire schema.

    Wraps a builtin summarizer mock (and optionally an embedder) so the
    HTTP transport and conformance suite can be exercised end to end
    without any external process.
    """

    def __init__(self, summarizer, embedder=None, extractor=None):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output clean
                pass

            def do_GET(self):
                if self.path == "/v1/health":
                    self._reply(200, {"status": "ok"})
                else:
                    self._reply(404, {"error": f"no such path: {self.path}"})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self._reply(400, {"error": "invalid JSON body"})
                    return
                if self.path == "/v1/summarize":
                    responses = []
                    for record in body.get("requests", []):
                        request = SummarizeRequest(
                            id=record["id"],
                            input=record["input"],
                            max_new_tokens=record.get("max_new_tokens", 512),
                            prefix=record.get("prefix"),
                        )
                        responses.append(outer.summarizer.summarize(request).to_json())
                    self._reply(200, {"responses": responses})
                elif self.path == "/v1/embed" and outer.embedder is not None:
                    vectors = outer.embedder.embed(body.get("texts", []))
                    self._reply(200, {"vectors": [list(map(float, v)) for v in vectors]})
                elif self.path == "/v1/extract" and outer.extractor is not None:
                    sets = [sorted(outer.extractor(t)) for t in body.get("texts", [])]
                    self._reply(200, {"concept_sets": sets})
                else:
                    self._reply(404, {"error": f"no such path: {self.path}"})

            def _reply(self, status, payload):
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.summarizer = summarizer
        self.embedder = embedder
        self.extractor = extractor
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
