"""
Error vocabulary shared by all pipeline stages.

Lower layers raise these; the control script in main.py maps them to exit codes.
"""


class RepairError(Exception):
    """Base class for every error raised by the repair pipeline."""


# ------------------- Values -------------------
class MalformedEnvelope(RepairError, ValueError):
    """Typed-envelope JSON is not valid or uses an unknown tag."""


class CharArity(RepairError, ValueError):
    """A char payload does not hold exactly one character."""


class Unparseable(RepairError, ValueError):
    """Mutated text no longer fits the type shape of the original value."""


# ------------------- Mutation -------------------
class Inapplicable(RepairError):
    """No mutation operator can change the given value."""


# ------------------- Harness -------------------
class AdapterUnavailable(RepairError):
    """The adapter process could not be spawned."""


class ProtocolError(RepairError):
    """The adapter answered with something other than protocol JSON."""


class OracleUnsupported(RepairError):
    """The requested oracle kind cannot be evaluated in this mode."""


# ------------------- Prompting -------------------
class BudgetImpossible(RepairError):
    """The fixed prompt sections alone exceed the character budget."""


class NoPatchFound(RepairError):
    """A model response contains no recognizable patch."""


# ------------------- LLM -------------------
class TransportError(RepairError):
    """A completion could not be obtained from the provider."""


class TransientFailure(TransportError):
    """A single attempt failed in a way that may succeed when retried."""


class RateLimited(TransientFailure):
    """The provider asked the client to slow down (HTTP 429)."""


class MalformedResponse(RepairError):
    """The provider answered but the payload has no message content."""


class ScriptMismatch(RepairError):
    """A scripted response expected the prompt to contain a substring it lacks."""


# ------------------- CLI -------------------
class SpecInvalid(RepairError, ValueError):
    """A bug-spec document violates one or more field constraints."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NoReports(RepairError):
    """No per-bug report rows were found."""
