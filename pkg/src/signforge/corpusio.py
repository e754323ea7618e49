"""Corpus files on disk and their conversion into model-ready datasets.

The on-disk corpus is what both the real pipeline and the synthetic generator
emit: a ``corpus.skels`` line-per-clip pose file with an ``.ids`` sidecar,
plus a tab-separated table (id, language, transcript, gloss, prompt).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .langgloss import Vocab, build_vocab, encode, to_langgloss
from .storage import counters_for, unpack_skels
from .training import PrioritizedDataset

TABLE_COLUMNS = ["id", "language", "transcript", "gloss", "prompt"]


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class CorpusRow:
    id: str
    language: str
    transcript: str
    gloss: str
    prompt: str

    @property
    def transcript_tokens(self):
        return self.transcript.split()

    @property
    def gloss_tokens(self):
        return self.gloss.split()

    @property
    def prompt_tokens(self):
        return self.prompt.split()


@dataclass(frozen=True)
class Corpus:
    rows: tuple
    poses: dict  # id -> (T, 150) float32

    def __len__(self):
        return len(self.rows)

    def languages(self):
        return sorted({r.language for r in self.rows})

    def rows_for(self, language: str):
        return [r for r in self.rows if r.language == language]

    def target_frames(self, row: CorpusRow) -> np.ndarray:
        """(T, 151) pose frames with the progress counter re-attached."""
        pose = self.poses[row.id]
        counters = counters_for(pose.shape[0]).astype(np.float32)
        return np.concatenate([pose, counters[:, None]], axis=1)


def load_corpus(skels_path, table_path=None) -> Corpus:
    ids_path = str(skels_path) + ".ids"
    if table_path is None:
        table_path = os.path.join(os.path.dirname(str(skels_path)), "corpus.tsv")
    with open(skels_path, "r", encoding="utf-8") as fh:
        clips = unpack_skels(fh.read())
    with open(ids_path, "r", encoding="utf-8") as fh:
        ids = [line.strip() for line in fh if line.strip()]
    if len(ids) != len(clips):
        raise CorpusError(f"{ids_path}: {len(ids)} ids for {len(clips)} skels lines")
    poses = dict(zip(ids, clips))

    rows = []
    with open(table_path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != TABLE_COLUMNS:
            raise CorpusError(f"{table_path}: unexpected header {header}")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(TABLE_COLUMNS):
                raise CorpusError(f"{table_path}:{line_no}: expected {len(TABLE_COLUMNS)} columns")
            rows.append(CorpusRow(*parts))
    missing = [r.id for r in rows if r.id not in poses]
    if missing:
        raise CorpusError(f"table rows without skels payload: {missing[:5]}")
    return Corpus(rows=tuple(rows), poses=poses)


def text_to_pose_dataset(corpus: Corpus, language: str, vocab: Vocab | None = None,
                         max_vocab: int = 16000, case_sensitive: bool = True):
    """Per-language dataset for the switching mode: transcript ids -> pose frames."""
    rows = corpus.rows_for(language)
    if not rows:
        raise CorpusError(f"no rows for language {language!r}")
    if vocab is None:
        vocab = build_vocab([r.transcript_tokens for r in rows], max_vocab, case_sensitive)
    samples = []
    for r in rows:
        ids, _ = encode(r.transcript_tokens, vocab)
        samples.append((np.array(ids, dtype=np.int64), corpus.target_frames(r)))
    return vocab, PrioritizedDataset(samples=samples), rows


def prompt_to_langgloss_dataset(corpus: Corpus, prompt_vocab: Vocab | None = None,
                                gloss_vocab: Vocab | None = None, max_vocab: int = 16000,
                                case_sensitive: bool = True):
    """Stage-1 dataset for the shared prompt mode: prompt ids -> LangGloss token ids."""
    registry = set(corpus.languages())
    targets = {}
    for r in corpus.rows:
        targets[r.id] = to_langgloss(r.gloss_tokens, r.language, registry)
    if prompt_vocab is None:
        prompt_vocab = build_vocab([r.prompt_tokens for r in corpus.rows], max_vocab, case_sensitive)
    if gloss_vocab is None:
        gloss_vocab = build_vocab(list(targets.values()), max_vocab, case_sensitive)
    samples = []
    for r in corpus.rows:
        src, _ = encode(r.prompt_tokens, prompt_vocab)
        tgt, _ = encode(targets[r.id], gloss_vocab)
        samples.append((np.array(src, dtype=np.int64), np.array(tgt, dtype=np.int64)))
    return prompt_vocab, gloss_vocab, PrioritizedDataset(samples=samples), targets


def langgloss_to_pose_dataset(corpus: Corpus, gloss_vocab: Vocab | None = None,
                              max_vocab: int = 16000, case_sensitive: bool = True):
    """Stage-2 dataset for the shared prompt mode: LangGloss ids -> pose frames."""
    registry = set(corpus.languages())
    samples = []
    targets = {r.id: to_langgloss(r.gloss_tokens, r.language, registry) for r in corpus.rows}
    if gloss_vocab is None:
        gloss_vocab = build_vocab(list(targets.values()), max_vocab, case_sensitive)
    for r in corpus.rows:
        ids, _ = encode(targets[r.id], gloss_vocab)
        samples.append((np.array(ids, dtype=np.int64), corpus.target_frames(r)))
    return gloss_vocab, PrioritizedDataset(samples=samples), targets
