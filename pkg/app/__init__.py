__all__ = [
    "api",
    "core",
    "models",
    "services",
    "utils",
]
