"""Variable time-step soft actor-critic with self-adjusting reward weights."""

__version__ = "0.1.0"
