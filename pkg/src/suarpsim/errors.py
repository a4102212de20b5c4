"""Exception hierarchy shared by every suarpsim module."""


class SuarpSimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SuarpSimError):
    """Invalid timer, topology or scenario configuration."""


class MalformedMessage(SuarpSimError):
    """Bytes that are not the canonical encoding of any message."""


class LengthMismatch(SuarpSimError):
    pass


class DecryptFailure(SuarpSimError):
    pass


class UnknownAssociation(SuarpSimError):
    """No key store entry for the requested (host, server) pair."""


class IntegrityReject(SuarpSimError):
    """A MIC carried by an inbound message failed verification."""


class ResolutionError(SuarpSimError):
    pass


class Timeout(ResolutionError):
    pass


class ServerUnreachable(ResolutionError):
    pass


class MappingUnknown(ResolutionError):
    """The resolution server answered that it holds no mapping for the IP."""


UnknownMapping = MappingUnknown


class DhcpError(SuarpSimError):
    pass


class NakReceived(DhcpError):
    pass


class NoOffer(DhcpError):
    pass


class LeaseExpired(DhcpError):
    pass


class PoolExhausted(DhcpError):
    pass


class NotAttached(SuarpSimError):
    pass


class NoServerConfigured(SuarpSimError):
    pass


class MalformedTrace(SuarpSimError):
    pass


class UnknownScheme(SuarpSimError):
    pass


class MissingFixture(SuarpSimError):
    pass
