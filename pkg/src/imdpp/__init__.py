"""Multi-item influence maximization over repeated promotions with dynamic perceptions."""
from .diffusion import (Event, Seed, SeedGroup, sigma_estimate, sigma_exact_static,
                        simulate_campaign)
from .dysim import DysimConfig, DysimResult, dysim_adaptive, dysim_solve
from .errors import (BudgetError, ConfigError, ImdppError, InputError, SchemaError,
                     SizeError)
from .graph_model import ItemCatalog, KnowledgeGraph, MetaGraph, SocialNetwork
from .harness import Dataset, ExperimentConfig, SyntheticSpec, generate_synthetic, run_experiment
from .kernels import BACKEND_NAME
from .solvers import SetFunctionOracle, baselines, brute_force_opt, smk_solve, usm_double_greedy
from .world import Params, World, array_world, build_world

__all__ = [
    "BACKEND_NAME", "BudgetError", "ConfigError", "Dataset", "DysimConfig", "DysimResult",
    "Event", "ExperimentConfig", "ImdppError", "InputError", "ItemCatalog", "KnowledgeGraph",
    "MetaGraph", "Params", "SchemaError", "Seed", "SeedGroup", "SetFunctionOracle", "SizeError",
    "SocialNetwork", "SyntheticSpec", "World", "array_world", "baselines", "brute_force_opt",
    "build_world", "dysim_adaptive", "dysim_solve", "generate_synthetic", "run_experiment",
    "sigma_estimate", "sigma_exact_static", "simulate_campaign", "smk_solve",
    "usm_double_greedy",
]
