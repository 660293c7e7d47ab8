"""Measurement-cost analysis of vibrational Hamiltonians on qubits.

Pipeline: SOP Hamiltonian -> expanded strings -> Pauli sum (direct mapping)
-> commuting groups -> FVCI-state variances -> shot allocation -> runtime.
"""
from .encode import QubitLayout, cnot_count_uvccsd, encode, expand_double_excitation
from .engine import (SpectrumResult, StateVector, expectation, fvci_ground_state,
                     group_variance, sample_group)
from .errors import (HermiticityError, InvariantViolation, ResourceLimitError,
                     ValidationError, VibrometerError)
from .estimator import (MeasurementPlan, ReductionReport, RuntimeReport, allocate, make_plan,
                        reduction_report, runtime)
from .group import (GroupingResult, MeasurementGroup, Scheme, mcr_partition,
                    mcr_sorted_insertion, sorted_insertion)
from .pauli import PauliString, PauliSum, fully_commute, multiply, qubit_wise_commute
from .sopham import (ExpandedHamiltonian, ModeBasisSpec, SopHamiltonian, SopTerm, count_terms,
                     expand, mode_combinations)
from .synth import TaylorPes, build_sop, ho_matrix_elements, rotate_coordinates

__version__ = "0.1.0"
