"""Model families: logistic with percentile calibration, boosted tree ensembles."""

from importlib import resources

from .boosting import (
    TrainConfig,
    TreeEnsembleModel,
    TreeNode,
    margin_matrix,
    score_ensemble,
    score_ensemble_matrix,
    train_boosted_trees,
    train_boosted_trees_rows,
)
from .logistic import (
    LogisticModel,
    LogisticTrainConfig,
    fit_logistic,
    fit_logistic_rows,
    fit_percentile_map,
    linear_score,
    percentile_of,
    score_logistic,
    score_logistic_matrix,
    sigmoid,
)
from .serialize import RiskModel, load_model, model_from_dict, model_to_dict, save_model

SURVEY_MODEL_RESOURCE = "survey_model.json"


def load_bundled_survey_model() -> LogisticModel:
    """The frozen questionnaire model shipped with the package."""
    ref = resources.files("c19risk.data").joinpath(SURVEY_MODEL_RESOURCE)
    with ref.open("r", encoding="utf-8") as fh:
        model = load_model(fh)
    if not isinstance(model, LogisticModel):
        raise TypeError("bundled survey model must be logistic")
    return model


__all__ = [
    "LogisticModel",
    "LogisticTrainConfig",
    "RiskModel",
    "TrainConfig",
    "TreeEnsembleModel",
    "TreeNode",
    "fit_logistic",
    "fit_logistic_rows",
    "fit_percentile_map",
    "linear_score",
    "load_bundled_survey_model",
    "load_model",
    "margin_matrix",
    "model_from_dict",
    "model_to_dict",
    "percentile_of",
    "save_model",
    "score_ensemble",
    "score_ensemble_matrix",
    "score_logistic",
    "score_logistic_matrix",
    "sigmoid",
    "train_boosted_trees",
    "train_boosted_trees_rows",
]
