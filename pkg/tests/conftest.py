import json
import random

import pytest

from medsum.transcript import conversation_to_json

from helpers import make_conversation, make_reference


@pytest.fixture
def cli_workspace(tmp_path):
    """A small on-disk corpus + lexicon + config for driving the CLI."""
    rng = random.Random(1234)
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()

    conversations = []
    splits = {"train": [], "dev": [], "test": []}
    for i in range(9):
        conv = make_conversation(f"conv-{i}", [10] * rng.choice([12, 40, 110]), rng=rng)
        conversations.append(conv)
        splits[("train", "dev", "test")[i % 3]].append(conv.id)

    with open(corpus_dir / "transcripts.jsonl", "w") as stream:
        for conv in conversations:
            stream.write(json.dumps(conversation_to_json(conv)) + "\n")

    with open(corpus_dir / "references.jsonl", "w") as stream:
        for conv in conversations:
            for k in range(3):
                ref = make_reference(conv.id, f"ann-{k}", rng)
                stream.write(
                    json.dumps(
                        {"conv_id": ref.conv_id, "annotator_id": ref.origin, "summary": ref.text}
                    )
                    + "\n"
                )

    lexicon = {
        "concepts": [
            {"id": "C-FEVER", "canonical": "fever", "surfaces": ["fever"], "category": "symptom"},
            {"id": "C-COUGH", "canonical": "cough", "surfaces": ["cough"], "category": "symptom"},
            {"id": "C-PAIN", "canonical": "pain", "surfaces": ["pain", "chest pain"], "category": "symptom"},
            {"id": "C-SOB", "canonical": "dyspnea", "surfaces": ["shortness of breath"], "category": "symptom"},
        ]
    }
    with open(corpus_dir / "lexicon.json", "w") as stream:
        json.dump(lexicon, stream)

    config = {
        "corpus": {
            "transcripts": "corpus/transcripts.jsonl",
            "references": "corpus/references.jsonl",
            "splits": splits,
        },
        "lexicon": "corpus/lexicon.json",
        "backends": {
            "stage1": {"kind": "builtin-mock", "endpoint": "lead1", "max_concurrency": 2},
            "stage2": {"kind": "builtin-mock", "endpoint": "echo"},
            "embedding": {"kind": "builtin-mock", "endpoint": "hash"},
        },
        "run": {"mode": "single", "output_dir": str(tmp_path / "run-out"), "seed": 0},
        "data": {"output_dir": str(tmp_path / "data-out")},
    }
    config_path = tmp_path / "config.json"
    with open(config_path, "w") as stream:
        json.dump(config, stream, indent=2)

    return {
        "root": tmp_path,
        "config": config_path,
        "config_dict": config,
        "conversations": conversations,
        "splits": splits,
    }
