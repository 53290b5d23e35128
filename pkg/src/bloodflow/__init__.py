"""Blood-bank network simulation, forecasting, and evaluation toolkit."""

__version__ = "0.1.0"

from .domain import (
    BloodType,
    Component,
    compatible_donors,
    rarity_score,
    sample_blood_type,
    shelf_life_days,
)
from .synthgen import Dataset, GenConfig, generate_dataset, zip_to_coord
from .store import BloodStore
from .simengine import POLICIES, ScenarioConfig, SimReport, run_simulation
from .forecast import ForecastTask, evaluate_model
from .stats import (
    acceptance_ratio,
    compare_runs,
    distance_reduction,
    marginal_performance,
    two_proportion_z_test,
)

__all__ = [
    "BloodType",
    "Component",
    "compatible_donors",
    "rarity_score",
    "sample_blood_type",
    "shelf_life_days",
    "Dataset",
    "GenConfig",
    "generate_dataset",
    "zip_to_coord",
    "BloodStore",
    "POLICIES",
    "ScenarioConfig",
    "SimReport",
    "run_simulation",
    "ForecastTask",
    "evaluate_model",
    "acceptance_ratio",
    "compare_runs",
    "distance_reduction",
    "marginal_performance",
    "two_proportion_z_test",
]
