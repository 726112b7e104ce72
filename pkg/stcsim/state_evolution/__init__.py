from .recursion import (
    SE_TRIALS,
    SE_TOL,
    SE_MAX_ITER,
    StateEvolutionError,
    InsufficientTrials,
    ModuleAStep,
    McEstimate,
    SeStep,
    SeState,
    se_module_a,
    se_module_b_mc,
    se_fixed_point,
)
