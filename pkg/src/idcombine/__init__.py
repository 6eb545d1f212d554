"""Forecast combination for intermittent demand.

A 12-method forecasting pool, nine hand-crafted demand features or pairwise
forecast diversity as meta-inputs, and a gradient-boosted tree learner that
maps either input to per-series softmax combination weights minimizing a
chosen scaled error (RMSSE for point forecasts, scaled pinball loss for
quantiles).
"""

from .boosting import BoostParams
from .combiner import (MetaModel, TrainingInstance, WeightVector, build_training_set,
                       combine, feature_importance, predict_weights, select_features,
                       simple_combiners, train, train_quantile_models)
from .config import RunConfig
from .core import (ConfigError, DataError, Dataset, DemandSeries, Period, SplitPlan,
                   ingest_csv, make_split, preprocess)
from .diversity import DiversityVector, diversity_vector, pair_diversity
from .features import (FeatureVector, SbcClass, approx_entropy, cv2, feature_vector,
                       idi, linear_chunk_var, ratio_last_chunk, sbc_classify,
                       simple_ratios)
from .forecasters import (ForecastMatrix, MethodId, forecast_aggregation_family,
                          forecast_all, forecast_croston_family, forecast_naive_family,
                          forecast_smoothing_family)
from .metrics import ErrorMatrix, average_rank, rmsse, spl
from .pooling import PoolSelection, pool_islands, pool_lasso, pool_screened
from .quantiles import QuantileForecast, quantile_forecast, residual_quantile

__version__ = "0.1.0"
