"""Minimum Bayes risk selection over embedding vectors, exact and centroid-based."""
from .clustering import Clustering, Init, KMeansConfig, assign_step, kmeanspp_init, run_kmeans, update_step
from .core import (CandidateInstance, DecodeResult, EmbeddingMatrix, RngHandle, Variant, argmax_with_ties,
                   validate_instance)
from .decoders import DecoderConfig, cbmbr, cbmbr_cnt, decode, mean_aggregate, oracle_select, vanilla_mbr
from .errors import (BadMagic, CbmbrError, DimensionMismatch, EmptySet, KTooLarge, NonFiniteValue,
                     TruncatedFile, VersionUnsupported, ZeroVector)
from .io import load_scenario, read_embeddings, write_embeddings
from .synth import BlobSpec, ScenarioSpec, gen_diverse, gen_multisystem
from .utility import UtilityFn, UtilityKind, score, score_matrix

__version__ = "0.1.0"
