"""Core application package."""

__all__ = [
    "commands",
    "errors",
    "main",
    "models",
    "services",
]
