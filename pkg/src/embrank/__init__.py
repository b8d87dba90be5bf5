"""embrank: answer-selection toolkit.

First-pass language-model retrieval over an inverted index, embedding
re-rankers (RWMD_Q / MMP / spanning RWMD_Q), score fusion, a relevance-
model baseline, learning-to-rank feature extraction with a coordinate-
ascent linear ranker, and IR evaluation with significance testing.
"""

from .analysis import AnalyzerConfig, TokenSequence, analyze, ngrams
from .candidates import Candidate, CandidateList
from .embeddings import (EmbeddingTable, LookupPolicy, cosine,
                         load_embeddings, lookup)
from .evaluation import (EvalReport, cross_validation_splits, evaluate_systems,
                         load_qrels, load_run, ndcg_at_k, paired_t_one_tailed,
                         precision_at_1, write_run)
from .features import (FeatureMatrix, export_letor, extract_base_features,
                       extract_embedding_features, parse_letor,
                       standardize_per_query)
from .fusion import FusionSpec, comb_sum, fuse, min_max_normalize
from .index import (InvertedIndex, build_index, lm_dirichlet_score, load_index,
                    retrieve, save_index)
from .ranker import LinearRanker, score_with_ranker, train_linear
from .relevance import RmConfig, estimate_relevance_model, rm_rescore
from .scorers import MmpConfig, SpanConfig, mmp, mmp_components, rwmd_q, s_rwmd_q, spans

__version__ = "0.1.0"
