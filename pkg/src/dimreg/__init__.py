"""Skip-gram graph embeddings with dimension-mean regularisation as an
alternative to negative sampling."""

from .graph import (EdgeSplit, Graph, average_clustering_coefficient, generate_erdos_renyi,
                    generate_sbm, load_edge_list, split_edges)
from .trainer import (NegativeSampler, TrainConfig, constriction, dimreg_update, init_embeddings,
                      positive_update, sgns_update, train)
from .walks import PairSet, WalkConfig, generate_walks, pairs_from_edges, pairs_from_walks

__version__ = "0.1.0"
