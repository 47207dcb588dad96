"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: ValueError (and subclasses,
including pydantic validation errors) -> 1, OSError -> 2,
ArithmeticError -> 3.
"""


class ShapeError(ValueError):
    """Incompatible operand shapes in a graph operation."""


class NonFiniteError(ArithmeticError):
    """A NaN or infinity appeared in a tensor value."""


class TrainingAborted(ArithmeticError):
    """Training hit a non-finite loss; carries the 1-based step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")
