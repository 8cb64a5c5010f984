"""Step-pulse propagation through thick resonant absorbers and the
superradiant bursts produced by phase-switched slice cascades."""

__version__ = "0.1.0"
