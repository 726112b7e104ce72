""" Errors that abort a turbo trial """


class TurboError(Exception):
    """ Base class for turbo iteration errors """


class ModuleAError(TurboError):
    """ The LMMSE update received an invalid prior """


class DivergenceError(TurboError):
    """ A message became non-finite """

    def __init__(self, iteration, stage):
        self.iteration = iteration
        self.stage = stage
        super().__init__(
            'non-finite values after {stage} in iteration {iteration}'.format(
                stage=stage, iteration=iteration
            )
        )


class DomainMismatch(TurboError):
    """ The denoiser works in another domain than the observations """


class ZeroNormTruth(TurboError):
    """ The NMSE is undefined for an all-zero reference channel """


class DenoiserInputError(TurboError):
    """ Module B received non-finite means or nonpositive variances """
