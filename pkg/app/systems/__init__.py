from .factory import SingleInputSystem, BoundedSingleInputSystem, MultiInputSystem, build_system

__all__ = ["SingleInputSystem", "BoundedSingleInputSystem", "MultiInputSystem", "build_system"]
