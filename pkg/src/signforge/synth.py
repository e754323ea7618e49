"""Deterministic synthetic corpora of (text, gloss, prompt, pose) for end-to-end tests.

Every token owns a fixed 8-frame pose motif (a pure function of the seed and
the token string); a clip's pose is the concatenation of its tokens' motifs,
so the text-to-pose mapping is exactly learnable and exactly invertible by
nearest-motif decoding.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from .langgloss import UNK
from .prompts import PromptTemplate, TemplateBank, associate, build_bank
from .storage import pack_skels, write_archive, read_archive

MOTIF_FRAMES = 8
POSE_WIDTH = 150
MOTIF_RANK = 8  # motifs live in a shared low-rank subspace so tiny heads can fit them exactly


@dataclass(frozen=True)
class SynthSpec:
    languages: tuple = ("ASL", "GSL")
    vocab_per_language: int = 6
    clips: int = 50  # per language
    frames_per_clip: tuple = (16, 32)
    motif_amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.languages or self.vocab_per_language < 1 or self.clips < 1:
            raise ValueError("languages, vocab_per_language and clips must all be >= 1")
        lo, hi = self.frames_per_clip
        if lo < MOTIF_FRAMES or hi < lo:
            raise ValueError(f"frames_per_clip must be a range within [{MOTIF_FRAMES}, ...]")

    def token_range(self) -> tuple[int, int]:
        lo, hi = self.frames_per_clip
        lo_t = max(1, -(-lo // MOTIF_FRAMES))
        hi_t = max(lo_t, hi // MOTIF_FRAMES)
        return lo_t, hi_t


@dataclass(frozen=True)
class SynthClip:
    id: str
    language: str
    transcript: str
    gloss: tuple
    prompt: str
    pose: np.ndarray  # (8 * tokens, 150) float32

    @property
    def tokens(self):
        return self.transcript.split()


@dataclass(frozen=True)
class SynthCorpus:
    spec: SynthSpec
    clips: tuple
    motifs: dict  # token -> (8, 150) float32
    bank: TemplateBank

    def by_language(self, language: str):
        return [c for c in self.clips if c.language == language]


def _hashed_rng(*parts) -> np.random.Generator:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(entropy=words.tolist()))


def motif_basis(seed: int) -> np.ndarray:
    rng = _hashed_rng("basis", seed)
    return rng.uniform(-1.0, 1.0, size=(MOTIF_RANK, POSE_WIDTH))


def token_motif(token: str, seed: int, amplitude: float, basis: np.ndarray | None = None) -> np.ndarray:
    """Fixed 8-frame motif for a token: seeded coefficients over the shared basis.

    Values are bounded by the amplitude; frames of every motif lie in the same
    rank-limited subspace, keeping the corpus learnable even by very small
    regression heads.
    """
    if basis is None:
        basis = motif_basis(seed)
    rng = _hashed_rng("motif", seed, token)
    coeff = rng.uniform(-1.0, 1.0, size=(MOTIF_FRAMES, MOTIF_RANK))
    return (amplitude * (coeff @ basis) / MOTIF_RANK).astype(np.float32)


def language_tokens(language: str, count: int) -> list[str]:
    return [f"{language.lower()}w{i}" for i in range(count)]


def default_bank(languages) -> TemplateBank:
    templates = []
    for lang in languages:
        templates.extend(
            [
                PromptTemplate(lang, f"please show {{Text}} as {lang} signing"),
                PromptTemplate(lang, f"what does {{Text}} look like in {lang}?"),
                PromptTemplate(lang, f"sign {{Text}} for me in {lang}"),
            ]
        )
    return build_bank(templates)


def motif_separation(motifs: dict) -> float:
    """Smallest mean-per-frame distance between any two distinct motifs."""
    tokens = sorted(motifs)
    best = np.inf
    for i in range(len(tokens)):
        a = motifs[tokens[i]].astype(np.float64)
        for j in range(i + 1, len(tokens)):
            b = motifs[tokens[j]].astype(np.float64)
            d = np.sqrt(((a - b) ** 2).sum(axis=1)).mean()
            best = min(best, d)
    return float(best)


def generate(spec: SynthSpec) -> SynthCorpus:
    """Build the corpus; a pure, bit-reproducible function of the spec."""
    motifs = {}
    basis = motif_basis(spec.seed)
    for lang in spec.languages:
        for token in language_tokens(lang, spec.vocab_per_language):
            motifs[token] = token_motif(token, spec.seed, spec.motif_amplitude, basis=basis)
    if len(motifs) > 1 and motif_separation(motifs) <= 0.0:
        raise RuntimeError("degenerate motif table: two tokens share a motif")

    lo_t, hi_t = spec.token_range()
    bank = default_bank(spec.languages)
    clips = []
    meta = []
    for lang in spec.languages:
        vocab = language_tokens(lang, spec.vocab_per_language)
        for index in range(spec.clips):
            rng = _hashed_rng("clip", spec.seed, lang, index)
            count = int(rng.integers(lo_t, hi_t + 1))
            chosen = [vocab[int(k)] for k in rng.integers(len(vocab), size=count)]
            transcript = " ".join(chosen)
            pose = np.concatenate([motifs[t] for t in chosen], axis=0)
            clip_id = f"{lang.lower()}-{index:04d}"
            meta.append((clip_id, transcript, lang))
            clips.append((clip_id, lang, transcript, tuple(t.upper() for t in chosen), pose))
    prompts_by_id = dict(associate(meta, bank, spec.seed))
    built = tuple(
        SynthClip(
            id=cid,
            language=lang,
            transcript=transcript,
            gloss=gloss,
            prompt=prompts_by_id[cid],
            pose=pose,
        )
        for cid, lang, transcript, gloss, pose in clips
    )
    return SynthCorpus(spec=spec, clips=built, motifs=motifs, bank=bank)


class MotifDecoder:
    """Nearest-motif pose-to-text decoder; the oracle reverse model.

    Chunks the pose into 8-frame windows and assigns each window the closest
    known motif, or <unk> when the best distance exceeds half the minimum
    pairwise motif separation. Trailing windows shorter than half a motif are
    dropped.
    """

    def __init__(self, motifs: dict):
        self.tokens = sorted(motifs)
        self.motifs = {t: np.asarray(motifs[t], dtype=np.float64) for t in self.tokens}
        self.threshold = motif_separation(self.motifs) / 2.0 if len(self.tokens) > 1 else np.inf

    def _match(self, chunk: np.ndarray) -> str:
        n = chunk.shape[0]
        best_token, best_dist = UNK, np.inf
        for token in self.tokens:
            motif = self.motifs[token][:n]
            d = np.sqrt(((chunk - motif) ** 2).sum(axis=1)).mean()
            if d < best_dist:
                best_token, best_dist = token, d
        if best_dist > self.threshold:
            return UNK
        return best_token

    def decode(self, pose: np.ndarray) -> list[str]:
        pose = np.asarray(pose, dtype=np.float64)
        out = []
        for start in range(0, pose.shape[0], MOTIF_FRAMES):
            chunk = pose[start : start + MOTIF_FRAMES]
            if start > 0 and chunk.shape[0] < MOTIF_FRAMES:
                # Partial tails are decoder run-on unless they match a motif.
                if chunk.shape[0] < MOTIF_FRAMES // 2:
                    break
                token = self._match(chunk)
                if token != UNK:
                    out.append(token)
                break
            out.append(self._match(chunk))
        return out

    def __call__(self, pose):
        return self.decode(pose)


def reverse_oracle(corpus: SynthCorpus) -> MotifDecoder:
    return MotifDecoder(corpus.motifs)


def save_oracle(decoder: MotifDecoder, path) -> None:
    entries = [(token, decoder.motifs[token].astype(np.float32)) for token in decoder.tokens]
    with open(path, "wb") as fh:
        fh.write(write_archive(entries))


def load_oracle(path) -> MotifDecoder:
    with open(path, "rb") as fh:
        entries = read_archive(fh.read())
    return MotifDecoder(dict(entries))


def write_corpus(corpus: SynthCorpus, outdir) -> dict:
    """Emit the same artifact set the real pipeline produces.

    corpus.skels + id sidecar, the per-clip metadata table, the template
    bank, and the serialized reverse oracle. Returns the path map.
    """
    os.makedirs(outdir, exist_ok=True)
    skels_path = os.path.join(outdir, "corpus.skels")
    ids_path = skels_path + ".ids"
    tsv_path = os.path.join(outdir, "corpus.tsv")
    bank_path = os.path.join(outdir, "bank.tsv")
    oracle_path = os.path.join(outdir, "oracle.motifs")

    text, ids = pack_skels([(c.id, c.pose) for c in corpus.clips])
    with open(skels_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(ids_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(ids) + "\n")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("id\tlanguage\ttranscript\tgloss\tprompt\n")
        for c in corpus.clips:
            fh.write(f"{c.id}\t{c.language}\t{c.transcript}\t{' '.join(c.gloss)}\t{c.prompt}\n")
    with open(bank_path, "w", encoding="utf-8") as fh:
        for lang in sorted(corpus.bank.by_language):
            for tpl in corpus.bank.by_language[lang]:
                fh.write(f"{tpl.language}\t{tpl.pattern}\n")
    save_oracle(reverse_oracle(corpus), oracle_path)
    return {
        "skels": skels_path,
        "ids": ids_path,
        "table": tsv_path,
        "bank": bank_path,
        "oracle": oracle_path,
    }
