from .services import TimelineService

__all__ = ["TimelineService"]
