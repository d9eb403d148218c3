"""Online logistic regression with exponential weights under a Gaussian prior."""

from .data_io import Dataset, load_data, parse_libsvm, read_libsvm, serialize_libsvm
from .harness import RegretReport, RoundLog, RunConfig, comparator_loss, run_online
from .loss import logistic_loss, sigmoid, smooth
from .posterior import PosteriorSpec
from .predictors import PREDICTORS, Prediction, corollary_schedule, ew_predict_exact

__all__ = ["Dataset", "load_data", "parse_libsvm", "read_libsvm", "serialize_libsvm",
           "RegretReport", "RoundLog", "RunConfig", "comparator_loss", "run_online",
           "logistic_loss", "sigmoid", "smooth", "PosteriorSpec", "PREDICTORS", "Prediction",
           "corollary_schedule", "ew_predict_exact"]
__version__ = "0.1.0"
