"""Arc-eager dependency parser with beam search and an averaged perceptron."""

from .conll import (ClusterLexicon, ConllError, Sentence, Token, default_punctuation,
                    read_clusters, read_conll, read_punctuation, read_tagged, write_conll)
from .decoder import Constraints, ParseResult, parse, parse_corpus
from .evaluation import EvalResult, evaluate
from .learning import TrainConfig, UpdateStrategy
from .model import ParserModel, load, save, train
from .oracles import OracleMode
from .transition import RootMode

__version__ = "0.1.0"

__all__ = [
    "ClusterLexicon", "ConllError", "Sentence", "Token", "default_punctuation", "read_clusters",
    "read_conll", "read_punctuation", "read_tagged", "write_conll", "Constraints", "ParseResult",
    "parse", "parse_corpus", "EvalResult", "evaluate", "TrainConfig", "UpdateStrategy",
    "ParserModel", "load", "save", "train", "OracleMode", "RootMode",
]
