"""Exception hierarchy shared across the pipeline.

The CLI maps ``ConfigError`` to exit code 2 (usage) and every other
``RagforgeError`` to exit code 1 (domain failure).
"""


class RagforgeError(Exception):
    """Base class for all domain errors raised by this package."""


class EmptyInputError(RagforgeError):
    """An operation received zero usable records."""


class InputError(RagforgeError):
    """A single input record is unusable (empty document text, etc.)."""


class FormatError(RagforgeError):
    """A persisted artifact has a bad magic, version, CRC, or truncation."""


class ConfigError(RagforgeError):
    """The config file failed validation; message carries the key path."""


class VersionMismatchError(RagforgeError):
    """Index and projection versions disagree at serving time."""


class BuildError(RagforgeError):
    """Index construction failed (duplicate ids, bad source record)."""


class QueryError(RagforgeError):
    """A search query is incompatible with the index (dim mismatch)."""


class TrainingError(RagforgeError):
    """Training diverged; message names the epoch and batch."""


class NumericalError(RagforgeError):
    """A loss evaluation went non-finite; message names the pair index."""


class SanitizeError(RagforgeError):
    """A NER provider failed; message carries the provider name."""


class RecordError(RagforgeError):
    """A keyed record is missing a named field."""


class TransportError(RagforgeError):
    """An LLM backend stayed unreachable after retries."""


class FixtureMissError(RagforgeError):
    """The scripted LLM provider has no fixture for a prompt hash."""

    def __init__(self, prompt_hash: str):
        super().__init__(f"no fixture for prompt hash {prompt_hash}")
        self.prompt_hash = prompt_hash


class MarkerParseError(RagforgeError):
    """LLM output contained no parseable QUESTION/ANSWER pairs."""

    def __init__(self, message: str, raw_output: str):
        super().__init__(message)
        self.raw_output = raw_output


class JudgeError(RagforgeError):
    """No judge sample could be parsed into a score."""


class EvaluationError(RagforgeError):
    """An evaluation query references a doc_id absent from the index."""
