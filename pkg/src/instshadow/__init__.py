"""Pairing, scoring and light-direction tools for instance shadow detection."""
from .association import MatchConfig, PairedAssociation, match_predictions, pair_and_match
from .geometry import BBox
from .mask import Mask
from .model import (
    GroundTruthDataset,
    Predictions,
    ValidationError,
    load_ground_truth,
    load_predictions,
)
from .soap import SoapConfig, SoapReport, evaluate

__version__ = "0.1.0"
