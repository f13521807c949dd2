"""Canonical score names, domain tags, and published reference constants.

Score names are spelled exactly as they appear in the annotated corpus
releases this engine interoperates with, including the historical
misspelling "punctution" in the terminal-punctuation signal.
"""

from __future__ import annotations

# Rule-based natural-language quality signals, in canonical column order.
SIGNAL_NAMES: tuple[str, ...] = (
    "doc_frac_no_alph_words",
    "doc_mean_word_length",
    "doc_frac_unique_words",
    "doc_unigram_entropy",
    "doc_word_count",
    "lines_ending_with_terminal_punctution_mark",
    "lines_numerical_chars_fraction",
    "lines_uppercase_letter_fraction",
    "doc_num_sentences",
    "doc_frac_chars_top_2gram",
    "doc_frac_chars_top_3gram",
)

# Hashed n-gram log-ratio importance scores against target domains.
IMPORTANCE_NAMES: tuple[str, ...] = (
    "books_importance",
    "wikipedia_importance",
    "math_importance",
)

# Model-based ratings. These are ingested from external annotation runs;
# the classifiers themselves are out of scope here.
MODEL_RATER_NAMES: tuple[str, ...] = (
    "Fineweb-edu",
    "Advertisement",
    "Fluency",
    "Required Expertise",
    "Writing Style",
    "Facts and Trivia",
    "Educational Value",
    "Professionalism",
    "Readability",
    "Reasoning",
    "Cleanliness",
)

# The four dimensions scored on an additive 0-5 scale; values are
# range-checked at ingestion.
PRRC_NAMES: tuple[str, ...] = (
    "Professionalism",
    "Readability",
    "Reasoning",
    "Cleanliness",
)

CANONICAL_SCORE_NAMES: tuple[str, ...] = SIGNAL_NAMES + IMPORTANCE_NAMES + MODEL_RATER_NAMES


def canonical_order(names) -> list[str]:
    """Sort score names into canonical column order; unknown names follow
    alphabetically after the canonical ones."""
    known = {name: i for i, name in enumerate(CANONICAL_SCORE_NAMES)}
    present = set(names)
    ordered = [n for n in CANONICAL_SCORE_NAMES if n in present]
    ordered.extend(sorted(n for n in present if n not in known))
    return ordered

DEFAULT_DOMAINS: tuple[str, ...] = (
    "CommonCrawl",
    "C4",
    "GitHub",
    "Books",
    "ArXiv",
    "Wikipedia",
    "StackExchange",
)

# SlimPajama domain proportions, used as the default selection mix.
DEFAULT_DOMAIN_WEIGHTS: dict[str, float] = {
    "CommonCrawl": 0.5220,
    "C4": 0.2670,
    "GitHub": 0.0520,
    "Books": 0.0420,
    "ArXiv": 0.0460,
    "Wikipedia": 0.0380,
    "StackExchange": 0.0330,
}

# Learned weights (percent) published from the reference full-scale run,
# shipped as a fixture. The percentages are as published and sum to 100.30
# due to rounding; normalize before using them as a weight vector.
REFERENCE_WEIGHT_PCT: dict[str, float] = {
    "Educational Value": 5.64,
    "doc_frac_no_alph_words": 4.93,
    "Fineweb-edu": 4.93,
    "lines_uppercase_letter_fraction": 4.88,
    "Facts and Trivia": 4.77,
    "doc_frac_chars_top_3gram": 4.73,
    "lines_ending_with_terminal_punctution_mark": 4.73,
    "doc_frac_chars_top_2gram": 4.71,
    "wikipedia_importance": 4.69,
    "lines_numerical_chars_fraction": 4.60,
    "doc_num_sentences": 4.58,
    "math_importance": 4.48,
    "Reasoning": 4.44,
    "doc_frac_unique_words": 4.32,
    "doc_word_count": 4.23,
    "doc_unigram_entropy": 4.22,
    "books_importance": 4.14,
    "Professionalism": 4.05,
    "Fluency": 4.02,
    "Readability": 3.93,
    "Required Expertise": 3.73,
    "Advertisement": 3.68,
    "Cleanliness": 1.17,
    "doc_mean_word_length": 0.65,
    "Writing Style": 0.05,
}
