import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from amrtsp.lm import (
    BOS,
    EOS,
    UNK,
    ArpaFormatError,
    read_arpa,
    score_continuation,
    score_sentence,
    train,
    write_arpa,
)

TOY = ["the", "boy", "wants", "to", "go"]
WORDS = ["cat", "dog", "the", "a", "sees", "runs", "big"]


def hand_unigram(word, d=0.75):
    # six observed tokens (five words plus </s>), six types, seven with <unk>
    count = 1 if word in TOY + [EOS] else 0
    return max(count - d, 0) / 6 + (d * 6 / 6) / 7


def conditional_sum(lm, context):
    words = [w for w in lm.vocab if w != BOS]
    return sum(10 ** lm.logprob(list(context), w) for w in words)


def random_corpus(seed, n=12):
    rng = random.Random(seed)
    return [[rng.choice(WORDS) for _ in range(rng.randint(1, 6))] for _ in range(n)]


def test_toy_bigram_hand_values(bigram_lm):
    boy = 0.25 / 1 + 0.75 * hand_unigram("boy")
    go = 0.75 * hand_unigram("go")
    assert bigram_lm.logprob(["the"], "boy") == pytest.approx(math.log10(boy), abs=1e-12)
    assert bigram_lm.logprob(["the"], "go") == pytest.approx(math.log10(go), abs=1e-12)
    assert bigram_lm.logprob(["the"], "boy") > bigram_lm.logprob(["the"], "go")
    assert score_continuation(bigram_lm, ["the"], ["boy"]) == pytest.approx(math.log10(boy), abs=1e-12)


def test_unigram_normalization(toy_lm):
    total = sum(10 ** toy_lm.probs[(w,)] for w in toy_lm.vocab if w != BOS)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_unknown_token_follows_unk_path(toy_lm):
    value = toy_lm.logprob(["the"], "zebra")
    assert math.isfinite(value)
    assert value == toy_lm.logprob(["the"], UNK)


def test_empty_continuation(toy_lm):
    assert score_continuation(toy_lm, ["the"], []) == 0.0
    assert score_continuation(toy_lm, [], []) == 0.0


def test_empty_context_means_sentence_start(toy_lm):
    assert score_continuation(toy_lm, [], ["the"]) == toy_lm.logprob([BOS], "the")


@settings(max_examples=50, deadline=None)
@given(tokens=st.lists(st.sampled_from(TOY + ["zebra", EOS]), min_size=1, max_size=8))
def test_monotone_in_length(toy_lm, tokens):
    for k in range(len(tokens)):
        assert score_continuation(toy_lm, ["the"], tokens[:k + 1]) <= score_continuation(toy_lm, ["the"], tokens[:k])


@settings(max_examples=50, deadline=None)
@given(context=st.lists(st.sampled_from(TOY), max_size=3),
       tokens=st.lists(st.sampled_from(TOY + ["zebra"]), min_size=1, max_size=6),
       cut=st.integers(0, 6))
def test_chain_rule(toy_lm, context, tokens, cut):
    cut = min(cut, len(tokens))
    whole = score_continuation(toy_lm, context, tokens)
    head = score_continuation(toy_lm, context, tokens[:cut])
    tail = score_continuation(toy_lm, (context or [BOS]) + tokens[:cut], tokens[cut:])
    assert abs(whole - (head + tail)) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("order", [1, 2, 3])
def test_observed_contexts_normalize(seed, order):
    lm = train(random_corpus(seed), order)
    contexts = {()} | {g[:-1] for g in lm.probs if len(g) > 1}
    for ctx in contexts:
        assert conditional_sum(lm, ctx) == pytest.approx(1.0, abs=1e-6)


def test_arpa_round_trip(tmp_path, bigram_lm):
    path = tmp_path / "toy.arpa"
    write_arpa(bigram_lm, path)
    again = read_arpa(path)
    assert again.order == 2 and again.counts() == bigram_lm.counts()
    assert score_sentence(again, TOY) == pytest.approx(score_sentence(bigram_lm, TOY), abs=1e-4)
    assert math.isfinite(again.logprob(["the"], "zebra"))


def test_arpa_write_is_deterministic(tmp_path):
    corpus = random_corpus(3)
    a, b = tmp_path / "a.arpa", tmp_path / "b.arpa"
    write_arpa(train(corpus, 3), a)
    write_arpa(train(corpus, 3), b)
    assert a.read_bytes() == b.read_bytes()


SHORT_ARPA = """\\data\\
ngram 1=4
ngram 2=5

\\1-grams:
-99\t<s>\t-0.3
-0.5\tthe\t-0.2
-0.6\tboy
-0.9\t<unk>

\\2-grams:
-0.1\t<s> the
-0.2\tthe boy
-0.3\tboy </s>
-0.4\tthe <unk>

\\end\\
"""


def test_arpa_count_mismatch(tmp_path):
    path = tmp_path / "short.arpa"
    path.write_text(SHORT_ARPA)
    with pytest.raises(ArpaFormatError):
        read_arpa(path)
    path.write_text(SHORT_ARPA.replace("ngram 2=5", "ngram 2=4"))
    assert read_arpa(path).counts() == [4, 4]


@pytest.mark.parametrize("text", [
    "",
    "\\data\\\nngram 1=1\n\n\\1-grams:\n-1.0\tx\n",
    "not an arpa file\n",
    "\\data\\\nngram 1=1\n\n\\1-grams:\nbanana\tx\n\n\\end\\\n",
])
def test_arpa_malformed(tmp_path, text):
    path = tmp_path / "bad.arpa"
    path.write_text(text)
    with pytest.raises(ArpaFormatError):
        read_arpa(path)


def test_training_errors():
    with pytest.raises(ValueError):
        train([TOY], order=0)
    with pytest.raises(ValueError):
        train([], order=2)
