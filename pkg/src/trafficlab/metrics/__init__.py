"""Evaluation metrics over rollouts: failures, coverage, diversity, profiles."""

from .dataset import (DatasetMetrics, dataset_metrics, driving_profile,
                      profile_histogram, wasserstein_1d)
from .density import (DensityProfile, coverage, density_grid,
                      drivable_cell_mask, kde_density, rollout_positions)
from .emd import diversity, emd, transport_distance
from .failures import FailureRates, failure_rates
from .perturb import ou_noise, ou_perturb, ou_perturb_log
from .report import (MetricReport, read_reports_json, report_from_dict,
                     write_reports_csv, write_reports_json)

__all__ = [
    "DatasetMetrics", "DensityProfile", "FailureRates", "MetricReport",
    "coverage", "dataset_metrics", "density_grid", "diversity",
    "drivable_cell_mask", "driving_profile", "emd", "failure_rates",
    "kde_density", "ou_noise", "ou_perturb", "ou_perturb_log",
    "profile_histogram", "read_reports_json", "report_from_dict",
    "rollout_positions", "transport_distance", "wasserstein_1d",
    "write_reports_csv", "write_reports_json",
]
