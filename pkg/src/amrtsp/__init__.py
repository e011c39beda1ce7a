"""AMR-to-text generation by ordering rule translations with an asymmetric generalized TSP."""
from .amr import AmrGraph, ConceptNode, bfs_order, parse_penman, serialize, undirected_distance
from .rules import MatchedRule, Rule, RuleBank, candidates, generate_concept_rules, load_rules, match_fragment
from .lm import NgramLm, read_arpa, score_continuation, write_arpa
from .transition import FeatureVector, TransitionExample, TransitionModel, extract_features
from .agtsp import INFINITE, AgtspInstance, AgtspNode, Tour, build_instance, solve_exact, solve_heuristic, tour_cost
from .generator import GenerationResult, GeneratorConfig, evaluate_corpus, generate
from .bleu import bleu

__version__ = "0.1.0"
