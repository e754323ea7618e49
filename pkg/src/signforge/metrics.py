"""Sequence and pose metrics: BLEU-n, ROUGE-L F1, normalized DTW, back-translation.

BLEU smoothing is an epsilon floor on each clipped n-gram precision (not
add-one), tokenization is the caller's; ROUGE is the LCS-based F1 with equal
precision/recall weight; DTW uses steps (1,0), (0,1), (1,1) with Euclidean
frame distance and divides the optimal cost by the optimal path's cell count
so clips of different durations stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

PRECISION_FLOOR = 1e-9


@dataclass(frozen=True)
class ScoreReport:
    bleu_1: float
    bleu_2: float
    bleu_3: float
    bleu_4: float
    rouge: float
    dtw: float

    def as_dict(self) -> dict:
        return asdict(self)


def _ngram_counts(tokens, n):
    counts: dict = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu_n(candidate, reference, n: int) -> float:
    """Geometric mean of clipped k-gram precisions (k=1..n) times the brevity penalty."""
    if not 1 <= n <= 4:
        raise ValueError("n must be in 1..4")
    candidate = list(candidate)
    reference = list(reference)
    if not candidate:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        cand_counts = _ngram_counts(candidate, k)
        ref_counts = _ngram_counts(reference, k)
        total = max(len(candidate) - k + 1, 0)
        clipped = sum(min(c, ref_counts.get(g, 0)) for g, c in cand_counts.items())
        precision = clipped / total if total > 0 else 0.0
        log_sum += np.log(max(precision, PRECISION_FLOOR))
    geo_mean = float(np.exp(log_sum / n))
    bp = min(1.0, float(np.exp(1.0 - len(reference) / len(candidate))))
    return geo_mean * bp


def _lcs_length(a, b) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge(candidate, reference) -> float:
    """ROUGE-L F1: harmonic mean of LCS precision and recall."""
    candidate = list(candidate)
    reference = list(reference)
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return 2.0 * precision * recall / (precision + recall)


def dtw(pose_a: np.ndarray, pose_b: np.ndarray) -> float:
    """Normalized dynamic-time-warping distance between two pose clips.

    Boundary-anchored DP; the returned value is the minimum alignment cost
    divided by the number of cells on the optimal path (ties during
    backtracking prefer the diagonal predecessor).
    """
    a = np.asarray(pose_a, dtype=np.float64)
    b = np.asarray(pose_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"incompatible pose shapes {a.shape} and {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("empty pose clip")
    ta, tb = a.shape[0], b.shape[0]
    # Pairwise Euclidean frame distances.
    diff = a[:, None, :] - b[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))

    acc = np.full((ta + 1, tb + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, ta + 1):
        for j in range(1, tb + 1):
            acc[i, j] = cost[i - 1, j - 1] + min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])

    # Backtrack to measure the optimal path length in cells.
    i, j = ta, tb
    path_cells = 1
    while i > 1 or j > 1:
        candidates = (acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
        move = int(np.argmin(candidates))  # diagonal wins ties
        if move == 0:
            i, j = i - 1, j - 1
        elif move == 1:
            i -= 1
        else:
            j -= 1
        path_cells += 1
    return float(acc[ta, tb] / path_cells)


class MissingReverseModel(Exception):
    pass


def back_translation_eval(forward_generate, reverse_decode, eval_items) -> ScoreReport:
    """Score a text-to-pose model by translating its output back to text.

    forward_generate: callable (token list, language) -> (T, 150) pose array.
    reverse_decode:   callable (pose array) -> token list.
    eval_items:       iterables of (tokens, language, reference_pose).

    BLEU/ROUGE compare decoded text against the source tokens; DTW compares
    generated poses against the reference poses. Scores are means over items.
    """
    if reverse_decode is None:
        raise MissingReverseModel("no reverse (pose-to-text) model supplied")
    bleu_scores = {1: [], 2: [], 3: [], 4: []}
    rouge_scores = []
    dtw_scores = []
    for tokens, language, reference_pose in eval_items:
        produced = forward_generate(tokens, language)
        decoded = reverse_decode(produced)
        for n in range(1, 5):
            bleu_scores[n].append(bleu_n(decoded, tokens, n))
        rouge_scores.append(rouge(decoded, tokens))
        dtw_scores.append(dtw(produced, reference_pose))
    return ScoreReport(
        bleu_1=float(np.mean(bleu_scores[1])),
        bleu_2=float(np.mean(bleu_scores[2])),
        bleu_3=float(np.mean(bleu_scores[3])),
        bleu_4=float(np.mean(bleu_scores[4])),
        rouge=float(np.mean(rouge_scores)),
        dtw=float(np.mean(dtw_scores)),
    )
