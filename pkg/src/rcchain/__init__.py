"""Detection, reduction and validation of uniform RC long chains in SPICE netlists."""

from .chain_detect import (Chain, ChainStats, CircuitGraph, build_graph, chain_stats,
                           detect_chains, ticer_time_constant, time_constant)
from .harness import (ErrorReport, ExperimentConfig, STANDARD_WAVEFORMS, compare_netlists,
                      emit_plot_data, run_sweep, weighted_errors)
from .models import (ChainParams, HalvedChain, Lumped, PortCurrent, Recurrence,
                     RecurrenceModel, ReducedModel, SmallTauCurrent)
from .netlist import (Dc, Element, Exp, Kind, Netlist, ParseError, Pulse, Sin, emit, parse,
                      remap_output_nodes)
from .reducer import ReducerConfig, Regime, RegimeKind, choose_model, classify, rewrite
from .spectral import (FGCoefficients, SpectralParams, admittance, admittance_bruteforce,
                       char_roots, fn_gn)
from .transim import (SimConfig, TransientTrace, eval_waveform, fit_recurrence,
                      reduced_current_large, reduced_current_small, simulate_full,
                      simulate_reduced)

__version__ = "0.1.0"
