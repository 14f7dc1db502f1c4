"""Match television shows from program-guide listings to social-network fanpages.

The pipeline ingests TV listings, blocks candidate fanpages with a top-k
name search, extracts pair features, resolves matches with either a score
model or a trained classifier, and post-processes selections on a bipartite
show-page graph.
"""

__version__ = "0.1.0"

from .epg import EpgRecord, Show, ShowKey, aggregate, normalize_title, parse_xmltv
from .errors import FanlinkError
from .features import FeatureVector, extract_features
from .pages import CandidateEdge, FanPage, PageStore, block, build_index, load_pages
from .scoring import ScoreConfig, decide, score

__all__ = [
    "CandidateEdge",
    "EpgRecord",
    "FanPage",
    "FanlinkError",
    "FeatureVector",
    "PageStore",
    "ScoreConfig",
    "Show",
    "ShowKey",
    "aggregate",
    "block",
    "build_index",
    "decide",
    "extract_features",
    "load_pages",
    "normalize_title",
    "parse_xmltv",
    "score",
    "__version__",
]
