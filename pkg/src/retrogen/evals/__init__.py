from . import entropy, subjective, templates

__all__ = ["entropy", "subjective", "templates"]
