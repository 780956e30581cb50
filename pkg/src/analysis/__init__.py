# Score and logit diagnostics
from .logit_stats import (
    STATS_COLUMNS, LogitStats, collect_logit_stats, exact_score_batch, grad_norm_l1,
    logit_stats_frame, score_proxy, taylor_score, taylor_score_batch, u_stats, u_stats_batch,
)
from .diagnostics import (
    BinnedExpectation, ThresholdAccuracy, accuracy_by_threshold, accuracy_by_tpr,
    conditional_expectation, limit_rank_agreement, limit_statistic, detection_error_limit,
)

__all__ = [
    'STATS_COLUMNS', 'LogitStats', 'collect_logit_stats', 'exact_score_batch', 'grad_norm_l1',
    'logit_stats_frame', 'score_proxy', 'taylor_score', 'taylor_score_batch', 'u_stats', 'u_stats_batch',
    'BinnedExpectation', 'ThresholdAccuracy', 'accuracy_by_threshold', 'accuracy_by_tpr',
    'conditional_expectation', 'limit_rank_agreement', 'limit_statistic', 'detection_error_limit',
]
