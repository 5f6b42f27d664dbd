"""Model-agnostic multistage summarization toolkit for doctor-patient
conversations: dataset construction (chunking and embedding-alignment
methods), single-stage and two-stage inference over pluggable backends,
and a multi-reference evaluation suite."""

from .alignment import (
    AlignConfig,
    Alignment,
    Snippet,
    align_sentence,
    build_inference_snippets,
    build_sentbert_training_examples,
)
from .backends import (
    BackendDescriptor,
    BackendError,
    ProtocolViolationError,
    SummarizeRequest,
    SummarizeResponse,
    WordTokenizer,
    resolve_embedder,
    resolve_summarizer,
    summarize_batch,
    truncate_to_limit,
)
from .chunking import (
    Chunk,
    ChunkConfig,
    build_chunk_training_examples,
    build_chunks,
    build_header,
    render_chunk,
)
from .concepts import Concept, Lexicon, concept_prf, extract_concepts, majority_vote_filter
from .dataset import Corpus, corpus_stats, export_finetune_dataset, load_corpus, select_target_reference
from .evaluation import (
    EvalReport,
    aggregate_multi_reference,
    baseline_reference_loo,
    baseline_training_random,
    evaluate_run,
)
from .agreement import AgreementStats, rater_agreement
from .pipeline import (
    RunConfig,
    RunResult,
    multistage_chunking,
    multistage_sentbert,
    run_pipeline,
    single_stage,
)
from .records import SummaryRecord, TrainingExample, load_references
from .rouge import PRF, RougeScores, rouge_l, rouge_n, score_pair
from .transcript import (
    Conversation,
    SpeakerRole,
    Turn,
    parse_transcript,
    serialize_with_roles,
    split_sentences,
    window_turns,
)

__version__ = "0.1.0"
