"""
Exception types raised by the social learning library
"""


class SocialLearningError(Exception):
    """Base class for every library error"""


class GraphSamplingError(SocialLearningError):
    """A random graph could not be drawn within the resampling budget"""


class ConvergenceError(SocialLearningError):
    """An iterative computation did not converge"""


class ModelSamplingError(SocialLearningError):
    """Likelihood parameters could not be drawn, or the drawn set is not identifiable"""


class DimensionMismatchError(SocialLearningError, ValueError):
    """Array shapes of the inputs do not agree"""


class WindowNotFilledError(SocialLearningError):
    """The learner window does not yet hold M+1 log-belief matrices"""


class SingularMomentError(SocialLearningError):
    """A sample moment matrix cannot be inverted"""


class IngestionError(SocialLearningError, ValueError):
    """Sentiment input could not be turned into a belief series"""


class TraceFormatError(SocialLearningError):
    """A trace file is malformed"""
