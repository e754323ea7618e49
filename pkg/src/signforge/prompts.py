"""Prompt-template bank: loading, rendering, and seeded association with transcripts.

Bank files are UTF-8 text, one template per line: language tag, a tab, then
the pattern, which must contain exactly one ``{Text}`` slot.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

SLOT = "{Text}"


class PromptError(Exception):
    pass


class NoTemplates(PromptError):
    pass


class BadSlot(PromptError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MalformedTemplateLine(PromptError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MissingLanguage(PromptError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    language: str
    pattern: str


@dataclass(frozen=True)
class TemplateBank:
    by_language: dict

    def group(self, language: str) -> list:
        if language not in self.by_language or not self.by_language[language]:
            raise MissingLanguage(f"no templates for language {language!r}")
        return self.by_language[language]

    @property
    def counts(self) -> dict:
        return {lang: len(group) for lang, group in self.by_language.items()}


def build_bank(templates) -> TemplateBank:
    by_language: dict = {}
    for tpl in templates:
        by_language.setdefault(tpl.language, []).append(tpl)
    return TemplateBank(by_language=by_language)


def parse_bank(text: str) -> TemplateBank:
    templates = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedTemplateLine(line_no, "expected '<language><TAB><pattern>'")
        language, pattern = line.split("\t", 1)
        language = language.strip()
        if not language:
            raise MalformedTemplateLine(line_no, "empty language tag")
        slots = pattern.count(SLOT)
        if slots != 1:
            raise BadSlot(line_no, f"pattern has {slots} {SLOT} slots, expected exactly 1")
        templates.append(PromptTemplate(language=language, pattern=pattern))
    if not templates:
        raise NoTemplates("bank contains no templates")
    return build_bank(templates)


def load_bank(path) -> TemplateBank:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_bank(fh.read())


def render(template: PromptTemplate, text: str) -> str:
    """Substitute the transcript into the slot verbatim; nothing else changes."""
    return template.pattern.replace(SLOT, text)


def _item_rng(seed: int, index: int, item_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{index}:{item_id}".encode("utf-8")).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(entropy=words.tolist()))


def associate(corpus, bank: TemplateBank, seed: int) -> list:
    """Pair each (id, transcript, language) with a uniformly drawn template.

    Per-item generators are derived from (seed, position, id), so output is a
    pure function of the inputs regardless of evaluation order.
    """
    out = []
    for index, (item_id, transcript, language) in enumerate(corpus):
        group = bank.group(language)
        rng = _item_rng(seed, index, item_id)
        tpl = group[int(rng.integers(len(group)))]
        out.append((item_id, render(tpl, transcript)))
    return out


def augment(corpus, bank: TemplateBank, k: int, seed: int) -> list:
    """k prompt variants per item, with distinct templates whenever the group allows."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return associate(corpus, bank, seed)
    out = []
    for index, (item_id, transcript, language) in enumerate(corpus):
        group = bank.group(language)
        rng = _item_rng(seed, index, item_id)
        n = len(group)
        if k <= n:
            picks = rng.permutation(n)[:k]
        else:
            picks = rng.integers(n, size=k)
        for pick in picks:
            out.append((item_id, render(group[int(pick)], transcript)))
    return out
