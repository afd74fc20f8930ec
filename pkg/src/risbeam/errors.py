"""Exception types shared by the artifact readers and the pipeline."""


class FormatError(ValueError):
    """A persisted artifact could not be parsed.

    ``lineno`` is 1-based; ``None`` when the problem is not tied to a line
    (for example an empty file).
    """

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class UnsupportedVersionError(FormatError):
    pass


class IncompatibleArtifactError(ValueError):
    """Two artifacts (codebook, dataset, state space, Q-table) do not belong together."""


class DatasetGenerationError(RuntimeError):
    pass
