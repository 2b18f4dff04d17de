"""Exception hierarchy; each class maps to a CLI exit code."""


class EvifuseError(Exception):
    exit_code = 1


class ConfigError(EvifuseError, ValueError):
    exit_code = 1


class DataError(EvifuseError, ValueError):
    exit_code = 2


class DivergenceError(EvifuseError, ArithmeticError):
    exit_code = 3
