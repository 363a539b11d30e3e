class AdapterError(Exception):
    """Base class for everything this package raises on purpose."""


class JobError(AdapterError):
    """An extraction job cannot run: unknown model, missing weights or
    images, undecodable input. The message names the first failure."""


class ValidationError(AdapterError):
    """A job or augmentation was specified inconsistently."""
