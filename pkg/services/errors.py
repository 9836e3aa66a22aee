# services/errors.py


class ChunkPunctError(Exception):
    """Base class for every error raised by the pipeline services."""


class ConfigError(ChunkPunctError):
    pass


class MalformedPlainText(ChunkPunctError):
    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"malformed plain text at token {position}: {message}")


class LengthMismatch(ChunkPunctError):
    def __init__(self, expected: int, got: int, where: str = ""):
        self.expected = expected
        self.got = got
        suffix = f" ({where})" if where else ""
        super().__init__(f"length mismatch: expected {expected}, got {got}{suffix}")


class UnknownLabel(ChunkPunctError):
    def __init__(self, token: str, position: int):
        self.token = token
        self.position = position
        super().__init__(f"unknown label {token!r} at position {position}")


class WordMismatch(ChunkPunctError):
    def __init__(self, position: int, expected: str = "", got: str = ""):
        self.position = position
        super().__init__(f"word mismatch at position {position}: {expected!r} != {got!r}")


class OverlapMismatch(ChunkPunctError):
    def __init__(self, position: int, chunk_index: int | None = None):
        self.position = position
        self.chunk_index = chunk_index
        super().__init__(
            f"overlap words differ at global position {position}"
            + (f" (chunk {chunk_index})" if chunk_index is not None else "")
        )


class MissingChunk(ChunkPunctError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"chunk {index} never arrived")


class ModelError(ChunkPunctError):
    """A restoration model could not produce a usable chunk."""


class ExternalModelError(ModelError):
    def __init__(self, chunk_index: int, message: str):
        self.chunk_index = chunk_index
        super().__init__(f"external model failed on chunk {chunk_index}: {message}")


class SweepError(ChunkPunctError):
    def __init__(self, m: int, doc: int, cause: Exception):
        self.m = m
        self.doc = doc
        self.cause = cause
        super().__init__(f"sweep failed at min_words_cut={m}, document {doc}: {cause}")


class FileFormatError(ChunkPunctError):
    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")
