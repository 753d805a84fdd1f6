"""Exception types shared across the pipeline.

The CLI maps DataError (bad input data) to exit code 1 and argparse usage
failures to exit code 2; everything else is a bug and propagates.
"""


class ConvrecError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ConvrecError):
    """Input data is missing, malformed, or violates an invariant."""


class CassetteMissError(ConvrecError):
    """Replay-mode lookup found no recorded response for a prompt hash."""

    def __init__(self, prompt_hash: str):
        self.prompt_hash = prompt_hash
        super().__init__(f"no recorded response for prompt hash {prompt_hash}")


class ProviderError(ConvrecError):
    """The LLM provider failed (network, timeout, or error status)."""
