"""Stdin/stdout JSON-lines worker wrapping the builtin mocks.

Run as ``python -m medsum.mock_worker --mock lead1`` to get a subprocess
backend for tests and demos: one JSON request per stdin line, one JSON
response per stdout line, EOF terminates. ``--reverse`` buffers the batch
and answers in reverse order, for exercising order-independent clients.
"""

from __future__ import annotations

import argparse
import json
import sys

from .backends import SummarizeRequest, _resolve_mock
from .concepts import Lexicon


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Builtin-mock summarizer worker (JSON lines)")
    parser.add_argument("--mock", default="lead1", help="mock endpoint, e.g. lead1, lead2@60, echo, keyword")
    parser.add_argument("--lexicon", default=None, help="lexicon JSON path (keyword mock only)")
    parser.add_argument("--reverse", action="store_true", help="answer the batch in reverse order")
    args = parser.parse_args(argv)

    lexicon = Lexicon.load(args.lexicon) if args.lexicon else None
    mock = _resolve_mock(args.mock, lexicon=lexicon)

    responses = []
    for line in sys.stdin:
        if not line.strip():
            continue
        record = json.loads(line)
        request = SummarizeRequest(
            id=record["id"],
            input=record["input"],
            max_new_tokens=record.get("max_new_tokens", 512),
            prefix=record.get("prefix"),
        )
        response = mock.summarize(request)
        if args.reverse:
            responses.append(response)
        else:
            sys.stdout.write(json.dumps(response.to_json(), ensure_ascii=False) + "\n")
            sys.stdout.flush()
    for response in reversed(responses):
        sys.stdout.write(json.dumps(response.to_json(), ensure_ascii=False) + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
