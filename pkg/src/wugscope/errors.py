"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class WugscopeError(Exception):
    exit_code = 1


class InputError(WugscopeError):
    exit_code = 1


class ParseError(InputError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class ConflictError(InputError):
    def __init__(self, lexeme, slot, first, second, line=None):
        self.lexeme = lexeme
        self.slot = slot
        self.forms = (first, second)
        self.line = line
        at = f" (line {line})" if line is not None else ""
        super().__init__(
            f"conflicting forms for lemma {lexeme!r}, slot {slot}: "
            f"{first!r} vs {second!r}{at}"
        )


class NumericError(WugscopeError):
    exit_code = 2


class ConfigError(WugscopeError):
    exit_code = 3
