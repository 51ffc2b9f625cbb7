"""
The four candidate model families and their hyperparameter records.
"""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field


class ModelKind(str, Enum):
    """Candidate model families, in tie-break order"""
    DT_CLASSIFIER = "DecisionTreeClassifier"
    DT_REGRESSOR = "DecisionTreeRegressor"
    RF_CLASSIFIER = "RandomForestClassifier"
    LINEAR_REGRESSION = "LinearRegression"

    @property
    def order(self) -> int:
        return list(ModelKind).index(self)

    @property
    def is_tree(self) -> bool:
        return self is not ModelKind.LINEAR_REGRESSION

    @property
    def is_classifier(self) -> bool:
        return self in (ModelKind.DT_CLASSIFIER, ModelKind.RF_CLASSIFIER)

    @classmethod
    def parse(cls, value: str) -> "ModelKind":
        """Accept the enum value, member name or a short alias (DTc, DTr, RF, LR)"""
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        lookup = {kind.value.lower(): kind for kind in cls}
        lookup.update({kind.name.lower(): kind for kind in cls})
        lookup.update(SHORT_NAMES_REVERSE)
        try:
            return lookup[text.lower()]
        except KeyError:
            raise ValueError(f"Unknown model kind: {value}")


SHORT_NAMES = {
    ModelKind.DT_CLASSIFIER: "DTc",
    ModelKind.DT_REGRESSOR: "DTr",
    ModelKind.RF_CLASSIFIER: "RF",
    ModelKind.LINEAR_REGRESSION: "LR",
}
SHORT_NAMES_REVERSE = {short.lower(): kind for kind, short in SHORT_NAMES.items()}


class Hyperparams(BaseModel):
    """
    Hyperparameters of one candidate. Only the fields relevant to the kind
    are read: criterion/min_samples_split/max_depth for trees,
    n_estimators for the forest, fit_intercept/normalize for the linear model.
    """
    model_config = ConfigDict(frozen=True)

    criterion: Optional[str] = None
    min_samples_split: int = Field(default=2, ge=2)
    max_depth: Optional[int] = Field(default=None, ge=1)
    n_estimators: int = Field(default=2, ge=1)
    fit_intercept: bool = True
    normalize: bool = False

    def relevant(self, kind: ModelKind) -> Dict[str, Any]:
        """The subset of fields that the given kind searches over"""
        if kind is ModelKind.DT_CLASSIFIER:
            return {"criterion": self.criterion, "min_samples_split": self.min_samples_split}
        if kind is ModelKind.DT_REGRESSOR:
            return {
                "criterion": self.criterion,
                "min_samples_split": self.min_samples_split,
                "max_depth": self.max_depth,
            }
        if kind is ModelKind.RF_CLASSIFIER:
            return {"criterion": self.criterion, "n_estimators": self.n_estimators}
        return {"fit_intercept": self.fit_intercept, "normalize": self.normalize}

    def label(self, kind: ModelKind) -> str:
        return ", ".join(
            "unbounded" if value is None else str(value).lower() if isinstance(value, bool) else str(value)
            for value in self.relevant(kind).values()
        )


DEFAULT_PARAMS = {
    ModelKind.DT_CLASSIFIER: Hyperparams(criterion="gini", min_samples_split=2),
    ModelKind.DT_REGRESSOR: Hyperparams(criterion="mse", min_samples_split=2, max_depth=None),
    ModelKind.RF_CLASSIFIER: Hyperparams(criterion="gini", n_estimators=2),
    ModelKind.LINEAR_REGRESSION: Hyperparams(fit_intercept=True, normalize=False),
}

CLASSIFIER_CRITERIA = ("gini", "entropy")
REGRESSOR_CRITERIA = ("mse", "poisson")
