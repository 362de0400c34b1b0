"""Unsupervised subword segmentation with unigram language models.

Morfessor EM+Prune (EM over segmentation lattices with MDL-guided lexicon
pruning), the Morfessor Baseline local-search trainer, and evaluation tools.
"""
__version__ = '0.1.0'

from .corpus import (GoldStandard, Morph, WordCountTable, read_gold_standard, read_model,
                     read_segmentations, read_word_counts, write_model, write_segmentations)
from .exceptions import (ConfigError, DegenerateInputError, EmPruneError, ModelError,
                         ParseError, UnsegmentableWordError, ValidationError)
from .model import ExpectedCounts, Segmentation, UnigramModel, m_step_bayesian, m_step_plain
from .lattice import (Lattice, build_lattice, corpus_estep, corpus_viterbi_counts,
                      forward_backward, nbest, sample_segmentation, sample_segmentations,
                      segment, viterbi, viterbi_segmentations)
from .prior import (CostBreakdown, PriorConfig, corpus_char_distribution, form_prior,
                    freq_distribution_prior, total_cost)
from .seed import ForceSplitRule, SeedConfig, build_seed
from .trainer import TrainConfig, TrainHistory, em_round, sentencepiece_preset, train
from .baseline import train_baseline
from .evaluation import boundary_prf, error_analysis, evaluate_cost, wilcoxon
