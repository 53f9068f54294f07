"""Typed errors shared across the toolkit.

Every failure mode callers are expected to handle gets its own class so
tests (and the CLI) can match on the name rather than parse messages.
"""


class SplatStreamError(Exception):
    """Base class for all toolkit errors."""


# --- splat model ---

class NonFiniteInput(SplatStreamError):
    pass


class ZeroQuaternion(SplatStreamError):
    pass


class EmptyScene(SplatStreamError):
    pass


# --- PLY ---

class PlyError(SplatStreamError):
    pass


class BadMagic(PlyError):
    pass


class UnsupportedFormat(PlyError):
    pass


class MissingProperty(PlyError):
    pass


class TruncatedBody(PlyError):
    pass


class HeaderTooLarge(PlyError):
    """Declared vertex count exceeds the allocation ceiling."""


# --- WIM ---

class DegenerateGrip(SplatStreamError):
    pass


# --- sorting ---

class SingularView(SplatStreamError):
    pass


class BadRange(SplatStreamError):
    pass


# --- rendering ---

class BehindCamera(SplatStreamError):
    pass


# --- protocol ---

class ProtocolError(SplatStreamError):
    pass


class BadFrameMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class CrcMismatch(ProtocolError):
    pass


class Truncated(ProtocolError):
    pass


class OversizePayload(ProtocolError):
    pass


class VersionOrder(ProtocolError):
    pass


class VersionMismatch(ProtocolError):
    pass


class IndexOutOfRange(ProtocolError):
    pass


class ChunkGap(ProtocolError):
    pass


class LengthMismatch(ProtocolError):
    pass


class BadPayload(ProtocolError):
    """Payload bytes do not decode as the declared frame type."""


# --- server ---

class TooManyClients(SplatStreamError):
    pass


class ParseFailed(SplatStreamError):
    pass


# --- bench ---

class EmptySamples(SplatStreamError):
    pass
