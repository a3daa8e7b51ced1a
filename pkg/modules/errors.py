class DataError(ValueError):
    """Dataset or file content is invalid"""


class ModelFileError(DataError):
    """Model file is truncated, malformed or fails its checksum"""


class ModelVersionError(ModelFileError):
    """Model file was written with an unsupported format_version"""


class TrainingError(RuntimeError):
    """Fitting could not produce a usable model"""


class ConfigError(ValueError):
    """Run configuration is invalid"""
