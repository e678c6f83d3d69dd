import numpy as np
import pytest

from edithumor.corpus import record_tokens, to_examples
from edithumor.text import build_vocab

import toydata


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_corpus():
    records = toydata.toy_records(64, 1)
    vocab = build_vocab(record_tokens(r) for r in records)
    examples, _ = to_examples(records, vocab, 20)
    return records, vocab, examples


@pytest.fixture
def toy_files(tmp_path):
    train, dev = toydata.write_toy_task_files(tmp_path)
    emb = tmp_path / "vectors.bin"
    toydata.write_toy_embeddings(emb)
    return {"train_csv": train, "dev_csv": dev, "embeddings": emb, "dir": tmp_path}


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""
    record = {"label": request.node.name, "detail": ""}
    yield record
    outcome = getattr(request.node, "rep_call", None)
    if outcome is None:
        return
    status = "PASS" if outcome.passed else "SKIP" if outcome.skipped else "FAIL"
    ACCEPTANCE_LINES.append(f"{status}  {record['label']}  {record['detail']}".rstrip())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
