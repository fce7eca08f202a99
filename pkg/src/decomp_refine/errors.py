"""Exception hierarchy shared across the pipeline."""


class DecompRefineError(Exception):
    pass


class ToolchainMissing(DecompRefineError):
    """Compiler or disassembler executable could not be found."""


class DisassemblyFailed(DecompRefineError):
    pass


class ParseError(DecompRefineError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(DecompRefineError):
    def __init__(self, sample_id: str, line: int | None = None):
        self.sample_id = sample_id
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate sample id {sample_id!r}{where}")


class EmptyInput(DecompRefineError):
    pass


class BackendUnavailable(DecompRefineError):
    pass


class ResponseTruncated(DecompRefineError):
    """The model stopped because it hit max_new_tokens.

    The partial response is kept on the exception so the caller can decide
    whether it is usable.
    """

    def __init__(self, message: str, response=None):
        super().__init__(message)
        self.response = response


class FixtureDirMissing(DecompRefineError):
    pass


class RationaleRejected(DecompRefineError):
    REASONS = ("invalid_comment", "missing_fields", "over_length")

    def __init__(self, reason: str, detail: str = ""):
        if reason not in self.REASONS:
            raise ValueError(f"unknown rejection reason {reason!r}")
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class EmptyGeneration(DecompRefineError):
    """Model response contained no brace-balanced C function."""


class JoinMismatch(DecompRefineError):
    pass


class ConfigError(DecompRefineError):
    pass
