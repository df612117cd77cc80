"""Exception base shared by the scattering library."""


class ScatteringError(Exception):
    """Base class for every error raised by the scattering library.

    The CLI catches this type per sweep row so one failing method does not
    abort the whole run.
    """
