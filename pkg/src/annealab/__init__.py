"""annealab: a desk-scale laboratory for advanced quantum-annealing schedules.

Builds Ising/QUBO models for weighted Max-Cut and Max-Clique, plants
initial solutions via reverse-annealing and h-gain transforms, simulates
the resulting time-dependent Hamiltonians exactly for small instances,
and tunes schedule parameters with Gaussian-process Bayesian optimization.
"""

from .annealer import (SampleSet, SimConfig, SimulationError, StateVector, anneal,
                       apply_hamiltonian, classical_anneal, dense_hamiltonian, evolve,
                       ground_state_overlap, init_state, sample)
from .bayesopt import (SENTINEL, GPModel, Observation, OptResult, SearchSpace, acquisition,
                       gp_fit, gp_predict, optimize, suggest_next, surrogate_heatmap)
from .harness import (ExperimentConfig, InstanceSet, ResultRow, best_objective,
                      build_instance_set, build_model, derive_seed, export_results, fitness,
                      run_baseline, run_comparison, run_full_study, tune_scaling_grid,
                      tune_schedules)
from .ising import (EXHAUSTIVE_LIMIT, IsingModel, PlantedModel, QuboModel, SpinConfig,
                    brute_force_solve, energy, filter_slack, homogenize, model_from_dict,
                    model_from_json, model_to_json, plant, qubo_to_ising)
from .problems import (ProblemInstance, WeightedGraph, brute_force_maxclique,
                       brute_force_maxcut, clique_check, cut_value, gen_er_graph,
                       graph_from_dict, graph_from_json, graph_to_json, maxclique_qubo,
                       maxcut_ising)
from .schedules import (AnnealFunctions, AnnealPath, HGainPath, SchedulePlan, Violation,
                        default_anneal_functions, effective_gain, eval_path, forward_path,
                        hgain_path, load_anneal_functions, plan_from_dict, plan_from_json,
                        plan_to_json, reverse_path, validate)

__version__ = "0.1.0"
