from .descriptive import Dispersion, dispersion, jaccard, quantile
from .inference import AnovaResult, KruskalResult, anova_one_way, kruskal_wallis, rankdata
from .reports import (
    ComparisonReport,
    VariabilityReport,
    build_reports,
    comparison_report,
    report_csv,
    report_json,
    variability_report,
)
from .special import betainc, chi2_sf, f_sf, gammainc, gammaincc

__all__ = [
    "AnovaResult",
    "ComparisonReport",
    "Dispersion",
    "KruskalResult",
    "VariabilityReport",
    "anova_one_way",
    "betainc",
    "build_reports",
    "chi2_sf",
    "comparison_report",
    "dispersion",
    "f_sf",
    "gammainc",
    "gammaincc",
    "jaccard",
    "kruskal_wallis",
    "quantile",
    "rankdata",
    "report_csv",
    "report_json",
    "variability_report",
]
