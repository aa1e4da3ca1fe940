"""
Mock tokenizers. Any callable ``word -> list of text tokens`` can drive the
builder; these two are the shipped plumbing.
"""
from typing import List


class WordTokenizer:
    """One text token per word."""

    def __call__(self, word: str) -> List[str]:
        return [word] if word else []


class CharTokenizer:
    """One text token per character."""

    def __call__(self, word: str) -> List[str]:
        return list(word)


TOKENIZERS = {
    "word": WordTokenizer,
    "char": CharTokenizer,
}
