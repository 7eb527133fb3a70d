from .judge import JudgeScore, judge
from .matching import (
    Alignment,
    LexiconSynonyms,
    MatcherConfig,
    ProviderUnavailable,
    TrigramCosine,
    align,
    lcs_ratio,
    longest_common_substring,
    names_match,
    normalize_name,
)
from .metrics import (
    METRIC_NAMES,
    EvalReport,
    attribute_metrics,
    datatype_metrics,
    evaluate_pair,
    key_metrics,
    mean_report,
    table_metrics,
)
from .report import CorpusReport, SampleResult

__all__ = [
    "Alignment",
    "CorpusReport",
    "EvalReport",
    "JudgeScore",
    "LexiconSynonyms",
    "METRIC_NAMES",
    "MatcherConfig",
    "ProviderUnavailable",
    "SampleResult",
    "TrigramCosine",
    "align",
    "attribute_metrics",
    "datatype_metrics",
    "evaluate_pair",
    "judge",
    "key_metrics",
    "lcs_ratio",
    "longest_common_substring",
    "mean_report",
    "names_match",
    "normalize_name",
    "table_metrics",
]
