from .base import Aqm, DropTail, Verdict
from .codel import CoDelAqm, CoDelState, codel_verdict
from .fuzzyrtt import CategoryController, FuzzyRttAqm, WindowedFlowCounter, blend_weights
from .red import RedAqm, RedState, red_verdict

__all__ = [
    "Aqm", "DropTail", "Verdict", "CoDelAqm", "CoDelState", "codel_verdict",
    "CategoryController", "FuzzyRttAqm", "WindowedFlowCounter", "blend_weights",
    "RedAqm", "RedState", "red_verdict",
]
