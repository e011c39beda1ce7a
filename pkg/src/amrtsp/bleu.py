"""Corpus-level BLEU (uniform weights, brevity penalty, no smoothing)."""
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Sequence

MAX_ORDER = 4


@dataclass
class BleuStats:
    matches: List[int] = field(default_factory=lambda: [0] * MAX_ORDER)
    totals: List[int] = field(default_factory=lambda: [0] * MAX_ORDER)
    hyp_len: int = 0
    ref_len: int = 0

    def precision(self, n: int) -> float:
        """Clipped n-gram precision for order ``n`` (1-based)."""
        total = self.totals[n - 1]
        return self.matches[n - 1] / total if total else 0.0


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_stats(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
                 max_order: int = MAX_ORDER) -> BleuStats:
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates but {len(references)} references")
    stats = BleuStats([0] * max_order, [0] * max_order)
    for hyp, ref in zip(candidates, references):
        hyp, ref = list(hyp), list(ref)
        stats.hyp_len += len(hyp)
        stats.ref_len += len(ref)
        for n in range(1, max_order + 1):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            stats.matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            stats.totals[n - 1] += max(len(hyp) - n + 1, 0)
    return stats


def bleu(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]],
         max_order: int = MAX_ORDER) -> float:
    """BLEU in [0, 100].

    The order is capped by the longest candidate, so a corpus of short
    sentences can still score.  Any order with zero matches gives 0.
    """
    if not references:
        raise ValueError("no references")
    longest = max((len(c) for c in candidates), default=0)
    order = min(max_order, longest)
    if order == 0:
        return 0.0
    stats = corpus_stats(candidates, references, order)
    if any(m == 0 for m in stats.matches):
        return 0.0
    log_p = sum(math.log(stats.precision(n)) for n in range(1, order + 1)) / order
    c, r = stats.hyp_len, stats.ref_len
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return 100.0 * bp * math.exp(log_p)
