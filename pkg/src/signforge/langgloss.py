"""Vocabulary construction and language-prefixed gloss tokens.

A LangGloss token is a gloss carrying its language as an explicit prefix,
``ASL_NOW`` style, so that one shared model can keep languages apart and a
stray cross-language token is mechanically detectable.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

# The eight tags the toolkit ships with; every API taking `languages` accepts
# any other registry.
DEFAULT_LANGUAGES = frozenset(
    {"ASL", "GSL", "DSGS", "LSF-CH", "LIS-CH", "LSA", "KSL", "TSL"}
)


class LangGlossError(Exception):
    pass


class EmptyCorpus(LangGlossError):
    pass


class AlreadyPrefixed(LangGlossError):
    pass


class UnknownLanguageTag(LangGlossError):
    pass


@dataclass(frozen=True)
class LangGlossToken:
    language: str
    gloss: str

    @property
    def surface(self) -> str:
        return f"{self.language}_{self.gloss}"


@dataclass(frozen=True)
class Violation:
    index: int
    token: str
    found_language: str | None  # None marks an unprefixed token

    @property
    def unprefixed(self) -> bool:
        return self.found_language is None


class Vocab:
    """Token/id bijection with the four specials pinned to ids 0-3."""

    def __init__(self, tokens, case_sensitive: bool = True):
        self.case_sensitive = case_sensitive
        self.id_to_token = list(SPECIALS) + [self._fold(t) for t in tokens]
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise LangGlossError("duplicate tokens in vocabulary")

    def _fold(self, token: str) -> str:
        return token if self.case_sensitive else token.lower()

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return self._fold(token) in self.token_to_id

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(self._fold(token), UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self.id_to_token[token_id]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("case_sensitive" if self.case_sensitive else "case_insensitive")
            fh.write("\n")
            for token in self.id_to_token[len(SPECIALS):]:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] not in ("case_sensitive", "case_insensitive"):
            raise LangGlossError(f"{path}: missing case header")
        return cls(lines[1:], case_sensitive=lines[0] == "case_sensitive")


def build_vocab(token_streams, max_size: int, case_sensitive: bool = True) -> Vocab:
    """Frequency-ranked vocabulary, ties broken lexicographically, capped at max_size."""
    if max_size < 5:
        raise ValueError("max_size must leave room for the specials (>= 5)")
    counts: Counter = Counter()
    for stream in token_streams:
        for token in stream:
            counts[token if case_sensitive else token.lower()] += 1
    if not counts:
        raise EmptyCorpus("no tokens in corpus")
    for reserved in SPECIALS:
        counts.pop(reserved, None)
    if not counts:
        raise EmptyCorpus("no tokens in corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    keep = [token for token, _ in ranked[: max_size - len(SPECIALS)]]
    return Vocab(keep, case_sensitive=case_sensitive)


def split_language_prefix(token: str, languages=DEFAULT_LANGUAGES):
    """(language, gloss) when the token carries a registered prefix, else (None, token)."""
    # Longest tag first so hyphenated tags like LSF-CH win over any prefix of them.
    for tag in sorted(languages, key=len, reverse=True):
        head = tag + "_"
        if token.startswith(head):
            return tag, token[len(head):]
    return None, token


def to_langgloss(tokens, language: str, languages=DEFAULT_LANGUAGES) -> list[str]:
    """Prefix every gloss token with the language tag, preserving order and length."""
    if language not in languages:
        raise UnknownLanguageTag(f"language {language!r} is not registered")
    out = []
    for index, token in enumerate(tokens):
        found, _ = split_language_prefix(token, languages)
        if found is not None:
            raise AlreadyPrefixed(f"token {token!r} at index {index} already carries prefix {found}_")
        out.append(f"{language}_{token}")
    return out


def detect_violation(tokens, expected_language: str, languages=DEFAULT_LANGUAGES) -> list[Violation]:
    """Flag tokens prefixed with a different registered language, and unprefixed tokens."""
    violations = []
    for index, token in enumerate(tokens):
        found, _ = split_language_prefix(token, languages)
        if found is None:
            violations.append(Violation(index=index, token=token, found_language=None))
        elif found != expected_language:
            violations.append(Violation(index=index, token=token, found_language=found))
    return violations


def encode(tokens, vocab: Vocab):
    """Ids wrapped in <bos>/<eos>; out-of-vocabulary tokens map to <unk> and are reported."""
    ids = [BOS_ID]
    oov = []
    for index, token in enumerate(tokens):
        token_id = vocab.id_of(token)
        if token_id == UNK_ID and token not in vocab:
            oov.append((index, token))
        ids.append(token_id)
    ids.append(EOS_ID)
    return ids, oov


def decode(ids, vocab: Vocab) -> list[str]:
    """Tokens for the given ids, with structural specials stripped."""
    out = []
    for token_id in ids:
        if token_id in (PAD_ID, BOS_ID):
            continue
        if token_id == EOS_ID:
            break
        out.append(vocab.token_of(token_id))
    return out
