"""Reusable protocol-conformance checks for summarizer backends.

The same suite runs against builtin mocks, subprocess workers, and HTTP
servers: hand it a :class:`BackendDescriptor` (or any batch callable) and
it verifies the id-bijection contract, batch handling, concurrent calls,
and tolerance of over-long inputs. A backend that passes is safe to plug
into the pipeline.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .backends import (
    BackendDescriptor,
    SummarizeRequest,
    SummarizeResponse,
    summarize_batch,
)

BatchCall = Callable[[Sequence[SummarizeRequest]], list[SummarizeResponse]]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def run_conformance_suite(
    backend,
    *,
    lexicon=None,
    token_limit: int = 1024,
    concurrency: int = 2,
) -> list[CheckResult]:
    """Run every conformance check and collect the results.

    ``backend`` is a :class:`BackendDescriptor`, a summarizer object, or a
    bare batch callable. Checks never raise; failures are reported in the
    returned results.
    """
    if isinstance(backend, BackendDescriptor):
        token_limit = backend.token_limit
    call = _as_batch_call(backend, lexicon=lexicon)
    checks = (
        ("empty_batch", _check_empty_batch),
        ("batch_of_eight", _check_batch_of_eight),
        ("concurrent_batches", _check_concurrent_batches(concurrency)),
        ("overlong_input", _check_overlong_input(token_limit)),
    )
    results = []
    for name, check in checks:
        try:
            results.append(check(call))
        except Exception as exc:
            results.append(CheckResult(name=name, passed=False, detail=str(exc)))
    return results


def assert_conformant(backend, **kwargs) -> list[CheckResult]:
    """Run the suite and raise AssertionError listing any failed checks."""
    results = run_conformance_suite(backend, **kwargs)
    failed = [r for r in results if not r.passed]
    if failed:
        lines = "; ".join(f"{r.name}: {r.detail}" for r in failed)
        raise AssertionError(f"backend failed conformance checks: {lines}")
    return results


def _as_batch_call(backend, *, lexicon=None) -> BatchCall:
    if isinstance(backend, BackendDescriptor) or hasattr(backend, "summarize") or hasattr(backend, "summarize_many"):
        return lambda batch: summarize_batch(backend, batch, lexicon=lexicon)
    if callable(backend):
        return backend
    raise TypeError(f"cannot run conformance against {type(backend).__name__}")


def _ids_bijective(batch: Sequence[SummarizeRequest], responses: Sequence[SummarizeResponse]) -> str:
    want = sorted(r.id for r in batch)
    got = sorted(r.id for r in responses)
    if want != got:
        return f"expected ids {want}, got {got}"
    if any(not isinstance(r.summary, str) for r in responses):
        return "a response carried a non-string summary"
    return ""


def _check_empty_batch(call: BatchCall) -> CheckResult:
    responses = call([])
    return CheckResult(
        name="empty_batch",
        passed=responses == [],
        detail="" if responses == [] else f"expected [], got {len(responses)} responses",
    )


def _check_batch_of_eight(call: BatchCall) -> CheckResult:
    batch = [
        SummarizeRequest(id=f"conf-{i}", input=f"Item {i} is fine. Item {i} repeats.", max_new_tokens=64)
        for i in range(8)
    ]
    detail = _ids_bijective(batch, call(batch))
    return CheckResult(name="batch_of_eight", passed=not detail, detail=detail)


def _check_concurrent_batches(concurrency: int):
    def check(call: BatchCall) -> CheckResult:
        batches = [
            [
                SummarizeRequest(id=f"t{t}-{i}", input=f"Thread {t} line {i}.", max_new_tokens=32)
                for i in range(4)
            ]
            for t in range(concurrency)
        ]
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            outcomes = list(pool.map(call, batches))
        for batch, responses in zip(batches, outcomes):
            detail = _ids_bijective(batch, responses)
            if detail:
                return CheckResult(name="concurrent_batches", passed=False, detail=detail)
        return CheckResult(name="concurrent_batches", passed=True)

    return check


def _check_overlong_input(token_limit: int):
    def check(call: BatchCall) -> CheckResult:
        words = " ".join(f"word{i}" for i in range(max(64, token_limit * 4)))
        batch = [SummarizeRequest(id="long-0", input=words + ".", max_new_tokens=64)]
        detail = _ids_bijective(batch, call(batch))
        return CheckResult(name="overlong_input", passed=not detail, detail=detail)

    return check
