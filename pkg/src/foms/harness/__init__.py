from .instances import GENERATOR_NAME, PROBLEMS, Instance, InstanceSpec, generate_problem
from .rates import RateReport, count_violations, fit_rate

__all__ = [
    "GENERATOR_NAME",
    "PROBLEMS",
    "Instance",
    "InstanceSpec",
    "RateReport",
    "count_violations",
    "fit_rate",
    "generate_problem",
]
