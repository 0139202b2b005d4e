"""Band structure and spectral gaps of a strip with periodic room-and-passage protuberances."""

from roomgap.errors import RoomgapError

__version__ = "0.1.0"

__all__ = ["RoomgapError", "__version__"]
