"""Pulse optimization and gate analysis for an electron-nuclear spin pair."""
from .dcrab import BasisSet, OptimizationResult, OptimizerConfig, dcrab_optimize, envelope, realize_waveform
from .gates import TargetGate, fom_av, fom_cb, gate_fidelity, named_gate
from .noise import OuParams, ou_params_from_coherence, sample_ensemble, sample_trajectory
from .propagator import ControlWaveform, propagate, propagate_batch, propagate_ensemble
from .spin_model import SystemParams, Transition
from .weyl import closest_local_factorization, f_nl, swap_equivalence_check, weyl_coordinates

__version__ = "0.1.0"
