"""MaNet: a linear CNN trained as a black-box optimizer, with a jSO baseline,
shifted-rotated benchmark objectives, rank-sum statistics and a campaign
runner."""

from .bench_suite import EvalBudget, Objective, SearchSpace, TransformData, make_objective, make_suite
from .harness import CampaignConfig, compare, run_campaign
from .jso import jso_run
from .manet import ManetConfig, optimize
from .record import RunRecord
from .stats import SampleSet, SummaryRow, WilcoxonResult, summarize, wilcoxon_rank_sum

__all__ = [
    "CampaignConfig",
    "EvalBudget",
    "ManetConfig",
    "Objective",
    "RunRecord",
    "SampleSet",
    "SearchSpace",
    "SummaryRow",
    "TransformData",
    "WilcoxonResult",
    "compare",
    "jso_run",
    "make_objective",
    "make_suite",
    "optimize",
    "run_campaign",
    "summarize",
    "wilcoxon_rank_sum",
]
