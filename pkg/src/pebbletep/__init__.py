"""Pebbling games, branching programs and their correspondence for tree evaluation."""
from .bp import (BranchingProgram, accepts, accepts_batch, dumps_bp, export_dot, first_accepting_path,
                 load, loads_bp, run_deterministic, size, store)
from .compile import (compile_black_to_dtbp, compile_fractional_to_bintbp, compile_group_sft,
                      compile_wbw_to_ntbp, eliminate_guess_states)
from .exceptions import (AnalysisError, BudgetExceeded, CompileError, IllegalMove, InvalidSequence,
                         MalformedProgram, ParseError, PebbleTepError)
from .pebbling import (BLACK, FRACTIONAL_BW, WHOLE_BW, PebbleConfig, PebbleSequence, apply_move,
                       generate_black_strategy, generate_fractional_strategy, generate_ro_wbw_strategy,
                       is_read_once, optimal_peak, optimal_strategy, validate_sequence)
from .tree import TepInstance, TreeShape, evaluate, hard_input

__version__ = "0.1.0"
