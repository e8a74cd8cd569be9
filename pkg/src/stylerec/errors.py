"""Shared exception types raised across the engine."""


class CorpusFormatError(ValueError):
    """A corpus file line could not be parsed; the message carries the line number."""


class UnknownSlotError(ValueError):
    """A slot name outside the eight canonical functional slots."""


class SlotConflictError(ValueError):
    """The same product id was declared with two different slots."""


class UnknownProductError(ValueError):
    """A product id absent from the vocabulary in use."""


class SlotCollisionError(ValueError):
    """Products whose slots must differ (or be absent from a partial outfit) collide."""


class EmptyPoolError(ValueError):
    """No candidate products exist for the requested slot and time window."""
