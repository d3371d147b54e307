"""Optimizers: mixed-variable NSGA-II and penalty gradient descent."""

from .gradient import GradConfig, GradResult, grad_penalty_descent
from .nsga2 import NSGA2Config, OptimizationAborted, nsga2
from .problem import DesignProblem, FunctionProblem, Population
from .sorting import crowding_distance, nondominated_sort
