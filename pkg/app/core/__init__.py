from .algebra import AlgebraElement, GroupElement, IDENTITY, KX, KY, KZ
from .errors import ReachError

__all__ = ["AlgebraElement", "GroupElement", "IDENTITY", "KX", "KY", "KZ", "ReachError"]
