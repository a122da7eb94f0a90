"""costguard: budget computation, spend monitoring, enforcement and alerting."""

__version__ = "0.1.0"
