from .diff import CorpusSummary, DiffReport, diff_one, diff_seed, run_corpus
from .fuzz import (ALL_FEATURES, FuzzSpec, gen_inputs, gen_program,
                   gen_program_with_params)

__all__ = [
    "ALL_FEATURES", "CorpusSummary", "DiffReport", "FuzzSpec", "diff_one",
    "diff_seed", "gen_inputs", "gen_program", "gen_program_with_params",
    "run_corpus",
]
