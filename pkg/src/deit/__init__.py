"""Dipolar-exchange induced transparency: structure, optics, transport and a verification oracle."""

__version__ = "0.1.0"

from .atomic import (ExchangeStates, RydbergState, TransitionDipole, angular_factor, c3_coefficient,
                     radial_matrix_element, state_energy, transition_dipole)
from .coupling import (CouplingScene, UniformExchange, dipole_dipole, exchange_field, level_shifts,
                       validity_report)
from .optics import (MediumConfig, SusceptibilityMap, blockade_distance, deit_linewidth, group_delay,
                     group_velocity, optical_depth, residual_absorption, susceptibility)
from .propagation import PulseState, Wavepacket, blockade_check, propagate, run_filter, step_transport, tla_absorb
from .scenario import Scenario, load_scenario, parse_scenario
from .spin import SpinSector, jpjm_eigenvalue, ladder_elements, photon_spin_balance, stored_photon_fraction

__all__ = [
    "CouplingScene", "ExchangeStates", "MediumConfig", "PulseState", "RydbergState", "Scenario",
    "SpinSector", "SusceptibilityMap", "TransitionDipole", "UniformExchange", "Wavepacket",
    "angular_factor", "blockade_check", "blockade_distance", "c3_coefficient", "deit_linewidth",
    "dipole_dipole", "exchange_field", "group_delay", "group_velocity", "jpjm_eigenvalue",
    "ladder_elements", "level_shifts", "load_scenario", "optical_depth", "parse_scenario",
    "photon_spin_balance", "propagate", "radial_matrix_element", "residual_absorption",
    "run_filter", "state_energy", "step_transport", "stored_photon_fraction", "susceptibility",
    "tla_absorb", "transition_dipole", "validity_report",
]
