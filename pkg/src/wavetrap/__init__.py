"""Classical wave-dynamics spatial search on oscillator networks.

Simulate energy transport on mass-spring networks with a side-branch
storage cavity, predict and measure capture resonances, compare wave
transport against diffusive hopping, and optimize cavity parameters and
topology for capture efficiency.
"""

from ._backend import SplitMix64, backend_name
from .dynamics import (EnergyLedger, StabilityError, State, Trajectory,
                       energy_ledger, evolve_exact, init_pulse,
                       init_site_excitation, run, step_verlet)
from .lattice import (Cavity, NetworkSpec, StiffnessSystem, ValidationError,
                      assemble, attach_cavity, build_chain, build_custom,
                      build_ring, fmo_preset, fmo_target_site, validate)
from .modes import (EigenSolverError, ModeBasis, ScatteringCoefficients,
                    band_edge, chain_dispersion, group_velocity, normal_modes,
                    resonance_frequencies, side_branch_scattering)
from .optimize import (ObjectiveSpec, OptimResult, ParameterSpec,
                       enumerate_connected_graphs, enumerate_topologies,
                       grid_search, refine_nelder_mead, tune_cavity)
from .transport import (CaptureReport, HoppingSystem, PulseParams,
                        ScalingPolicy, SiteExcitation, StandingPacket,
                        capture_report, hopping_baseline, hopping_system,
                        images_reference, reflection_fidelity,
                        resonance_scan, scaling_study, spreading_exponent)

__version__ = "0.1.0"
