"""From-scratch corpus NLG metrics and the weighted mixed reward.

Implements token-level BLEU-1..4 (add-one smoothing on zero-match orders),
an LCS-based F-measure, and a light METEOR variant (exact + stem unigram
alignment, no synonym stage). All scores live in [0, 1]. The mixed reward
is the weighted sum used as the reinforcement-learning training signal.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, asdict
from typing import Sequence

Tokens = Sequence[str]

# weights for (bleu1, bleu2, bleu3, bleu4, meteor, rouge_l)
DEFAULT_REWARD_WEIGHTS = (2.0, 2.0, 1.0, 1.0, 2.0, 2.0)

ROUGE_BETA = 1.2


def _ngram_counts(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(hyp: Tokens, ref: Tokens, n: int) -> tuple[int, int]:
    """(clipped matches, total hypothesis n-grams) for one order."""
    hyp_counts = _ngram_counts(hyp, n)
    ref_counts = _ngram_counts(ref, n)
    matches = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    total = max(len(hyp) - n + 1, 0)
    return matches, total


def _combine_bleu(order_counts: list[tuple[int, int]], hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for matches, total in order_counts:
        if matches == 0:
            p = (matches + 1) / (total + 1)
        else:
            p = matches / total
        log_sum += math.log(p)
    bp = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return bp * math.exp(log_sum / len(order_counts))


def bleu_n(hyp: Tokens, ref: Tokens, n: int) -> float:
    """Sentence BLEU-n: geometric mean of clipped precisions times brevity penalty."""
    if not 1 <= n <= 4:
        raise ValueError(f"BLEU order must be in 1..4, got {n}")
    counts = [_clipped_counts(hyp, ref, k) for k in range(1, n + 1)]
    return _combine_bleu(counts, len(hyp), len(ref))


def corpus_bleu(pairs: Sequence[tuple[Tokens, Tokens]], n: int) -> float:
    """Corpus BLEU-n: n-gram counts and lengths pooled over all pairs."""
    pooled = []
    for k in range(1, n + 1):
        matches = 0
        total = 0
        for hyp, ref in pairs:
            m, t = _clipped_counts(hyp, ref, k)
            matches += m
            total += t
        pooled.append((matches, total))
    hyp_len = sum(len(h) for h, _ in pairs)
    ref_len = sum(len(r) for _, r in pairs)
    return _combine_bleu(pooled, hyp_len, ref_len)


def rouge_l(hyp: Tokens, ref: Tokens, beta: float = ROUGE_BETA) -> float:
    """LCS F-measure with recall weight beta."""
    if len(hyp) == 0 or len(ref) == 0:
        return 0.0
    # two-row DP for the LCS length
    prev = [0] * (len(ref) + 1)
    for h in hyp:
        cur = [0]
        for j, r in enumerate(ref, start=1):
            if h == r:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[-1]))
        prev = cur
    lcs = prev[-1]
    if lcs == 0:
        return 0.0
    p = lcs / len(hyp)
    r = lcs / len(ref)
    return (1 + beta ** 2) * p * r / (r + beta ** 2 * p)


def light_stem(token: str) -> str:
    """Tiny suffix stripper used for the METEOR stem-match stage."""
    if token.endswith("ing") and len(token) > 5:
        return token[:-3]
    if token.endswith("ed") and len(token) > 4:
        return token[:-2]
    if token.endswith("es") and len(token) > 4:
        return token[:-2]
    if token.endswith("s") and len(token) > 3 and not token.endswith("ss"):
        return token[:-1]
    return token


def _align(hyp: Tokens, ref: Tokens) -> list[tuple[int, int]]:
    """Earliest-match unigram alignment: exact pass, then stem pass.

    Deterministic by construction; returns (hyp_idx, ref_idx) pairs sorted
    by hypothesis position.
    """
    pairs: list[tuple[int, int]] = []
    taken = [False] * len(ref)
    open_hyp = []
    ref_pos: dict[str, list[int]] = {}
    for j, r in enumerate(ref):
        ref_pos.setdefault(r, []).append(j)
    cursor: dict[str, int] = {}
    for i, h in enumerate(hyp):
        positions = ref_pos.get(h, ())
        k = cursor.get(h, 0)
        while k < len(positions) and taken[positions[k]]:
            k += 1
        if k < len(positions):
            pairs.append((i, positions[k]))
            taken[positions[k]] = True
            cursor[h] = k + 1
        else:
            cursor[h] = k
            open_hyp.append(i)
    for i in open_hyp:
        s = light_stem(hyp[i])
        for j, r in enumerate(ref):
            if not taken[j] and light_stem(r) == s:
                pairs.append((i, j))
                taken[j] = True
                break
    pairs.sort()
    return pairs


def meteor_lite(hyp: Tokens, ref: Tokens) -> float:
    """Unigram-alignment METEOR with the standard fragmentation penalty.

    score = F_mean * (1 - 0.5 * (chunks / matches)^3), F_mean = 10PR/(R+9P).
    The synonym stage is omitted; stems come from :func:`light_stem`.
    """
    if len(hyp) == 0 or len(ref) == 0:
        return 0.0
    pairs = _align(hyp, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    chunks = 1 + sum(
        1
        for (h0, r0), (h1, r1) in zip(pairs, pairs[1:])
        if not (h1 == h0 + 1 and r1 == r0 + 1)
    )
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1 - penalty)


def mixed_reward(hyp: Tokens, ref: Tokens, weights: Sequence[float] = DEFAULT_REWARD_WEIGHTS) -> float:
    """Weighted sum of BLEU-1..4, METEOR and the LCS F-measure."""
    parts = (
        bleu_n(hyp, ref, 1),
        bleu_n(hyp, ref, 2),
        bleu_n(hyp, ref, 3),
        bleu_n(hyp, ref, 4),
        meteor_lite(hyp, ref),
        rouge_l(hyp, ref),
    )
    return sum(w * s for w, s in zip(weights, parts))


@dataclass
class MetricBundle:
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    meteor: float
    rouge_l: float
    mixed_reward: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def score_corpus(
    hyps: Sequence[Tokens],
    refs: Sequence[Tokens],
    weights: Sequence[float] = DEFAULT_REWARD_WEIGHTS,
    corpus_level: bool = True,
) -> MetricBundle:
    """Score a matched hypothesis/reference corpus.

    BLEU pooling is corpus-level by default (sentence-averaged otherwise);
    METEOR and the LCS score are averaged per pair in both modes. The
    bundle's mixed reward is the weighted sum of its own components.
    """
    if len(hyps) != len(refs):
        raise ValueError("hypothesis/reference count mismatch")
    if len(hyps) == 0:
        raise ValueError("empty corpus")
    pairs = list(zip(hyps, refs))
    if corpus_level:
        bleus = [corpus_bleu(pairs, n) for n in range(1, 5)]
    else:
        bleus = [
            sum(bleu_n(h, r, n) for h, r in pairs) / len(pairs) for n in range(1, 5)
        ]
    met = sum(meteor_lite(h, r) for h, r in pairs) / len(pairs)
    rl = sum(rouge_l(h, r) for h, r in pairs) / len(pairs)
    components = (*bleus, met, rl)
    reward = sum(w * s for w, s in zip(weights, components))
    return MetricBundle(*components, mixed_reward=reward)
