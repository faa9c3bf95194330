class MrstabError(ValueError):
    pass


# metric graphs
class DisconnectedGraph(MrstabError):
    pass

class SelfLoop(MrstabError):
    pass

class DuplicateEdge(MrstabError):
    pass

class InvalidVertex(MrstabError):
    pass

class ZeroDisplacement(MrstabError):
    pass

class EmptySet(MrstabError):
    pass


# groups and spaces
class OracleInconsistent(MrstabError):
    pass

class BallTooLarge(MrstabError):
    pass

class NotSmallCancellation(MrstabError):
    pass

class NotHyperbolicType(MrstabError):
    pass

class ImageEscapesBall(MrstabError):
    pass

class PeripheralNotSubgenerated(MrstabError):
    pass

class CosetOutsideBall(MrstabError):
    pass


# estimators
class BadT(MrstabError):
    pass

class MarginViolation(MrstabError):
    pass

class TooLarge(MrstabError):
    pass

class NotGeodesic(MrstabError):
    pass

class HypothesisViolated(MrstabError):
    pass


# experiments
class ConfigInvalid(MrstabError):
    pass

class CacheCorrupt(MrstabError):
    pass

class IoFailure(MrstabError):
    pass

class BudgetExceeded(MrstabError, RuntimeError):
    '''Raised when a run cannot produce even a partial result inside its vertex or time budget'''
    pass
