"""Backoff n-gram language model with ARPA import/export.

Training uses interpolated absolute discounting (discount 0.75) whose lowest
order interpolates with a uniform distribution over the vocabulary plus
``<unk>``.  The interpolated model is stored in ordinary backoff form, so a
trained model and one read from an ARPA file score through the same code.
All values are log10.
"""
from __future__ import annotations

import math
import re
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
DISCOUNT = 0.75
# ARPA convention for the begin marker, which is never predicted.
NEVER = -99.0

Ngram = Tuple[str, ...]


class ArpaFormatError(ValueError):
    pass


class NgramLm:
    def __init__(self, order: int, probs: Dict[Ngram, float], backoffs: Dict[Ngram, float]):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.probs = probs
        self.backoffs = backoffs
        self.vocab = frozenset(g[0] for g in probs if len(g) == 1)
        if UNK not in self.vocab:
            raise ValueError("model has no <unk> unigram")

    def __repr__(self):
        counts = self.counts()
        return f"NgramLm(order={self.order}, counts={counts})"

    def counts(self) -> List[int]:
        out = [0] * self.order
        for g in self.probs:
            out[len(g) - 1] += 1
        return out

    def _map(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def logprob(self, history: Sequence[str], token: str) -> float:
        """log10 p(token | history) by standard backoff."""
        token = self._map(token)
        hist = tuple(self._map(t) for t in history[-(self.order - 1):]) if self.order > 1 else ()
        penalty = 0.0
        while True:
            p = self.probs.get(hist + (token,))
            if p is not None:
                return penalty + p
            if not hist:
                # unreachable for a well-formed model: <unk> is a unigram
                return penalty + self.probs[(UNK,)]
            penalty += self.backoffs.get(hist, 0.0)
            hist = hist[1:]


def _history(context: Sequence[str]) -> List[str]:
    return list(context) if context else [BOS]


def score_continuation(lm: NgramLm, context: Sequence[str], continuation: Sequence[str]) -> float:
    """Sum of log10 p over ``continuation`` given the tail of ``context``.

    An empty context means beginning of sentence.
    """
    hist = _history(context)
    total = 0.0
    for tok in continuation:
        total += lm.logprob(hist, tok)
        hist.append(tok)
    return total


def score_sentence(lm: NgramLm, tokens: Sequence[str]) -> float:
    return score_continuation(lm, [BOS], list(tokens) + [EOS])


# ---------------------------------------------------------------------------
# training

def train(corpus: Iterable[Sequence[str]], order: int = 4, discount: float = DISCOUNT) -> NgramLm:
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0 < discount < 1:
        raise ValueError("discount must be in (0, 1)")
    counts: List[Dict[Ngram, int]] = [defaultdict(int) for _ in range(order)]
    n_sent = 0
    for sent in corpus:
        n_sent += 1
        toks = [BOS] + list(sent) + [EOS]
        for i in range(1, len(toks)):
            for n in range(1, order + 1):
                if i - n + 1 < 0:
                    break
                counts[n - 1][tuple(toks[i - n + 1:i + 1])] += 1
    if n_sent == 0:
        raise ValueError("empty training corpus")

    # context totals and distinct continuations per order
    ctx_total: List[Dict[Ngram, int]] = []
    ctx_types: List[Dict[Ngram, int]] = []
    for n in range(order):
        tot, typ = defaultdict(int), defaultdict(int)
        for g in sorted(counts[n]):
            tot[g[:-1]] += counts[n][g]
            typ[g[:-1]] += 1
        ctx_total.append(tot)
        ctx_types.append(typ)

    words = sorted(g[0] for g in counts[0])
    if UNK not in words:
        words.append(UNK)
        words.sort()
    uniform = 1.0 / len(words)

    # probabilities in the linear domain, lowest order first
    lin: Dict[Ngram, float] = {}
    total = ctx_total[0][()]
    gamma0 = discount * ctx_types[0][()] / total
    for w in words:
        c = counts[0].get((w,), 0)
        lin[(w,)] = max(c - discount, 0.0) / total + gamma0 * uniform
    gammas: Dict[Ngram, float] = {(): gamma0}

    # every suffix of an observed n-gram is itself observed, so lin[g[1:]] exists
    for n in range(1, order):
        for ctx in sorted(ctx_total[n]):
            gammas[ctx] = discount * ctx_types[n][ctx] / ctx_total[n][ctx]
        for g in sorted(counts[n]):
            ctx = g[:-1]
            lin[g] = (counts[n][g] - discount) / ctx_total[n][ctx] + gammas[ctx] * lin[g[1:]]

    probs: Dict[Ngram, float] = {g: math.log10(p) for g, p in lin.items()}
    probs[(BOS,)] = NEVER
    backoffs: Dict[Ngram, float] = {}
    for ctx, gamma in gammas.items():
        if ctx:
            backoffs[ctx] = math.log10(gamma)
    return NgramLm(order, probs, backoffs)


def read_corpus(path, lowercase: bool = True) -> List[List[str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = (line.lower() if lowercase else line).split()
            if toks:
                out.append(toks)
    return out


# ---------------------------------------------------------------------------
# ARPA

def _fmt(x: float) -> str:
    return f"{x:.7f}"


def write_arpa(lm: NgramLm, path) -> None:
    by_order: List[List[Ngram]] = [[] for _ in range(lm.order)]
    for g in lm.probs:
        by_order[len(g) - 1].append(g)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n\\data\\\n")
        for n, grams in enumerate(by_order, 1):
            fh.write(f"ngram {n}={len(grams)}\n")
        for n, grams in enumerate(by_order, 1):
            fh.write(f"\n\\{n}-grams:\n")
            for g in sorted(grams):
                line = f"{_fmt(lm.probs[g])}\t{' '.join(g)}"
                if g in lm.backoffs and n < lm.order:
                    line += f"\t{_fmt(lm.backoffs[g])}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


_COUNT_RE = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_RE = re.compile(r"^\\(\d+)-grams:$")


def read_arpa(path) -> NgramLm:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh]
    i = 0
    while i < len(lines) and lines[i] != "\\data\\":
        i += 1
    if i == len(lines):
        raise ArpaFormatError("missing \\data\\ header")
    i += 1
    declared: Dict[int, int] = {}
    while i < len(lines) and lines[i]:
        m = _COUNT_RE.match(lines[i])
        if not m:
            raise ArpaFormatError(f"malformed count line {lines[i]!r}")
        declared[int(m.group(1))] = int(m.group(2))
        i += 1
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise ArpaFormatError("missing or non-contiguous ngram counts")
    order = max(declared)
    probs: Dict[Ngram, float] = {}
    backoffs: Dict[Ngram, float] = {}
    seen = defaultdict(int)
    current: Optional[int] = None
    ended = False
    for line in lines[i:]:
        if not line:
            continue
        if line == "\\end\\":
            ended = True
            break
        m = _SECTION_RE.match(line)
        if m:
            current = int(m.group(1))
            if current not in declared:
                raise ArpaFormatError(f"undeclared section {line!r}")
            continue
        if current is None:
            raise ArpaFormatError(f"entry outside any section: {line!r}")
        parts = line.split()
        if len(parts) not in (current + 1, current + 2):
            raise ArpaFormatError(f"bad {current}-gram line {line!r}")
        try:
            prob = float(parts[0])
            bow = float(parts[current + 1]) if len(parts) == current + 2 else None
        except ValueError:
            raise ArpaFormatError(f"non-numeric value in {line!r}") from None
        g = tuple(parts[1:current + 1])
        probs[g] = prob
        if bow is not None:
            backoffs[g] = bow
        seen[current] += 1
    if not ended:
        raise ArpaFormatError("missing \\end\\ marker")
    for n, count in declared.items():
        if seen[n] != count:
            raise ArpaFormatError(f"declared {count} {n}-grams but found {seen[n]}")
    if (UNK,) not in probs:
        # floor for unseen tokens when the producer did not emit <unk>
        probs[(UNK,)] = NEVER
    return NgramLm(order, probs, backoffs)
