"""Error types shared across the learning stack."""


class ParameterError(ValueError):
    """Shapes, names, or descriptor layouts disagree with the model."""


class TrainingError(RuntimeError):
    """A training step produced non-finite losses; message carries batch stats."""
