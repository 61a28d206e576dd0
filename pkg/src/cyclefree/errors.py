class ReviewError(Exception):
    """Base class for faults raised by this package."""


class FormatError(ReviewError):
    """Malformed instance, assignment, dataset or spec file."""


class ForeignEdgeError(ReviewError):
    def __init__(self, agent, paper):
        super().__init__(f"foreign edge {agent}/{paper}: not a qualification edge")
        self.agent = agent
        self.paper = paper


class NoWeightsError(ReviewError):
    def __init__(self):
        super().__init__("no weights: instance is unweighted")


class GreedyStuckError(ReviewError):
    """Raised by greedy_dag when fewer than d_paper eligible reviewers remain."""

    def __init__(self, paper, iteration, eligible):
        super().__init__(
            f"stuck at paper {paper} (iteration {iteration}): "
            f"only {eligible} eligible reviewers"
        )
        self.paper = paper
        self.iteration = iteration
        self.eligible = eligible


class SwapExhaustedError(ReviewError):
    """Raised by greedy_swap when neither a direct addition nor a swap exists."""

    def __init__(self, paper, assigned):
        super().__init__(f"swap exhausted at paper {paper} with {assigned} reviews assigned")
        self.paper = paper
        self.assigned = assigned


class OracleTooLargeError(ReviewError):
    def __init__(self, n_edges, cap):
        super().__init__(
            f"instance too large for oracle: {n_edges} qualification edges > cap {cap}"
        )


class DatasetError(FormatError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GeneratorError(ReviewError):
    """Generator inputs violate the construction's preconditions."""
