"""vsg-adapters: optional bridges from real external models into the vsgkit
wire formats. No metric or tracking logic lives here; the adapters only
produce files and speak protocols the primary toolkit defines."""

__version__ = "0.1.0"


class AdapterError(Exception):
    """The external model or endpoint is unavailable or misconfigured."""
