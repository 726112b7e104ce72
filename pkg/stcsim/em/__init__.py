from .learning import (
    PROB_MIN,
    PROB_MAX,
    SIGMA2_FLOOR,
    INIT_ACTIVITY,
    INIT_P01,
    INIT_GAMMA,
    GAMMA_STEP,
    LambdaUpdate,
    EmState,
    Learner,
    FsLearner,
    DsLearner,
    IidLearner,
    em_init_sigma2,
    em_init_fs,
    em_init_ds,
    em_init_iid,
    em_update_fs,
    em_update_ds,
    em_update_iid,
    params_to_dict,
)
