"""Exception types shared across the package.

Every error a caller is expected to handle has its own class so that the
CLI and the HTTP layer can map them to exit codes / status codes by name.
"""

from __future__ import annotations


class PropagatorError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# -- corpus ------------------------------------------------------------

class MalformedRecord(PropagatorError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateUser(PropagatorError):
    def __init__(self, user_id: str):
        super().__init__(f"duplicate user_id {user_id!r}")
        self.user_id = user_id


class EmptyDataset(PropagatorError):
    pass


class SingleClass(PropagatorError):
    pass


# -- personality -------------------------------------------------------

class MalformedLexicon(PropagatorError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyCategory(PropagatorError):
    def __init__(self, name: str):
        super().__init__(f"lexicon category {name!r} has no terms")
        self.name = name


class MalformedMapping(PropagatorError):
    pass


class UnknownCategory(PropagatorError):
    def __init__(self, name: str):
        super().__init__(f"trait mapping references unknown category {name!r}")
        self.name = name


# -- features ----------------------------------------------------------

class NegativeLongevity(PropagatorError):
    pass


# -- preprocess --------------------------------------------------------

class UnknownFeature(PropagatorError):
    def __init__(self, name: str):
        super().__init__(f"unknown feature {name!r}")
        self.name = name


class EmptyMask(PropagatorError):
    pass


class TooFewMinority(PropagatorError):
    pass


# -- classify ----------------------------------------------------------

class DimensionMismatch(PropagatorError):
    pass


class NonFiniteLoss(PropagatorError):
    pass


class VersionMismatch(PropagatorError):
    pass


class CorruptModel(PropagatorError):
    pass


# -- waittime / recommend ----------------------------------------------

class NegativeDeadline(PropagatorError):
    pass


class EmptyOutcomes(PropagatorError):
    pass


# -- simulate ----------------------------------------------------------

class InvalidConfig(PropagatorError):
    pass


class BudgetExceedsPopulation(PropagatorError):
    pass


# -- service -----------------------------------------------------------

class UnknownModel(PropagatorError):
    def __init__(self, model_id: str):
        super().__init__(f"unknown model {model_id!r}")
        self.model_id = model_id


class InvalidTemplate(PropagatorError):
    pass


class CampaignClosed(PropagatorError):
    pass


class UnknownCampaign(PropagatorError):
    def __init__(self, campaign_id: str):
        super().__init__(f"unknown campaign {campaign_id!r}")
        self.campaign_id = campaign_id


class AlreadyDispatched(PropagatorError):
    def __init__(self, user_id: str):
        super().__init__(f"user {user_id!r} was already contacted in this campaign")
        self.user_id = user_id


class UnknownCandidate(PropagatorError):
    def __init__(self, user_id: str):
        super().__init__(f"user {user_id!r} is not a known candidate")
        self.user_id = user_id


class MessageTooLong(PropagatorError):
    pass
