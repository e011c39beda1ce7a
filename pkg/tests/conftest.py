import pytest

from amrtsp.amr import parse_penman
from amrtsp.lm import train
from amrtsp.rules import RuleBank, read_rules
from amrtsp.transition import TransitionModel

WANT_GO = "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))"
BELIEVE = """(w / want-01
      :ARG0 (b / boy)
      :ARG1 (b2 / believe-01
            :ARG0 (g / girl)
            :ARG1 b))"""
RULE_LINES = [
    "(w / want-01) ||| wants ||| 1",
    "(g / go-01) ||| to go ||| 1",
    "(w / want-01 :ARG1 (g / go-01)) ||| wants to go ||| 1",
    "(b / boy) ||| The boy ||| 1",
]
SENTENCE = "The boy wants to go"


@pytest.fixture
def want_go():
    return parse_penman(WANT_GO)


@pytest.fixture
def believe():
    return parse_penman(BELIEVE)


@pytest.fixture
def rules():
    r1, r2, r3, r4 = read_rules(RULE_LINES)
    return {"r1": r1, "r2": r2, "r3": r3, "r4": r4}


@pytest.fixture
def bank(rules):
    return RuleBank(rules.values())


@pytest.fixture(scope="session")
def toy_lm():
    return train([SENTENCE.lower().split()], order=4)


@pytest.fixture(scope="session")
def bigram_lm():
    return train([SENTENCE.lower().split()], order=2)


@pytest.fixture
def lm_only_model():
    # LM-dominant weights with scaling disabled: p(yes) = sigmoid(lm_score)
    return TransitionModel([1.0, 0.0, 0.0, 0.0])
