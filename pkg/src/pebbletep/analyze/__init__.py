from .adders import (AdderReport, adder_bp, adder_census, minimal_adder_search, two_pair_adder_bp)
from .census import CensusReport, entropy_census, parse_threshold
from .checks import (Verdict, Violation, check_bitwise_independence, check_syntactic_read_once,
                     check_thrifty)
from .extract import (CriticalPebbling, FractionalExtraction, PathPebbling, StateValues,
                      check_state_determined, critical_pebbling, critical_pebblings, designated_paths,
                      extract_bintbp_pebbling, extract_rontbp_pebbling, find_input, find_pebbled,
                      rontbp_state_config, state_pebble_values, unpebbled_values)
from .statesets import BddStateSets, ExplicitStateSets, StateSets, compute_state_sets
