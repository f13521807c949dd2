import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qselect.corpus import Document


def make_doc(doc_id, text, domain="C4", scores=None):
    return Document(doc_id, text, domain, len(text.split()), scores)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_text(rng, max_len=200):
    """Mixed-content random string: words, digits, punctuation, CJK, emoji."""
    pools = [
        "abcdefghijklmnopqrstuvwxyz",
        "ABCDEFGHIJKLMNOPQRSTUVWXYZ",
        "0123456789",
        " \t\n",
        ".,!?\"'();:-",
        "éüßñđł",
        "你好世界文字",
        "こんにちは",
        "\U0001f600\U0001f680☃",
    ]
    n = int(rng.integers(0, max_len))
    chars = []
    for _ in range(n):
        pool = pools[int(rng.integers(0, len(pools)))]
        chars.append(pool[int(rng.integers(0, len(pool)))])
    return "".join(chars)


def mixed_language_fixture(n_docs=200, seed=7):
    """Deterministic 200-document fixture mixing scripts and structures."""
    rng = np.random.default_rng(seed)
    english = (
        "The quick brown fox jumps over the lazy dog. It was the best of times, "
        "it was the worst of times. All happy families are alike."
    ).split()
    texts = []
    for i in range(n_docs):
        kind = i % 5
        if kind == 0:
            k = int(rng.integers(5, 120))
            words = [english[int(rng.integers(0, len(english)))] for _ in range(k)]
            texts.append(" ".join(words))
        elif kind == 1:
            texts.append(random_text(rng, 300))
        elif kind == 2:
            lines = []
            for _ in range(int(rng.integers(1, 8))):
                lines.append(random_text(rng, 60).replace("\n", " "))
            texts.append("\n".join(lines))
        elif kind == 3:
            texts.append("x " * int(rng.integers(1, 30)) + str(int(rng.integers(0, 1e6))))
        else:
            texts.append("")
    return texts
