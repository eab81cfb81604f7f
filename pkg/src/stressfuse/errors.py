"""Exception hierarchy for the stressfuse pipeline."""


class StressFuseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(StressFuseError):
    """Input data violates a structural contract (shape, rate, label set)."""


class InvalidLabelError(ValidationError):
    """A class label id is outside the accepted set."""


class MissingModalityError(StressFuseError):
    """A required sensor modality file or stream is absent."""


class CsvParseError(StressFuseError):
    """A CSV row could not be parsed; carries file and 1-based line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class ConfigurationError(StressFuseError):
    """A configuration value is out of range or internally inconsistent."""


class FeatureExtractionError(StressFuseError):
    """Feature extraction failed for a window (e.g. no detectable pulse)."""


class DegenerateTrainingError(StressFuseError):
    """Training data cannot support the requested model (e.g. one class)."""
