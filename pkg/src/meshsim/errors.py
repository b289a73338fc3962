"""Exception types raised by the simulator and kernels."""


class MeshSimError(Exception):
    """Base class for all simulator errors."""


class BoundsError(MeshSimError):
    """Coordinate outside the configured mesh."""


class AddressError(MeshSimError):
    """Global address does not decode to a single owner, or a range spans owners."""


class MemoryFault(AddressError):
    """Access to an unmapped hole in the global address space."""


class DomainError(MeshSimError):
    """Argument outside an operation's domain (zero-byte transfer, bad grid, ...)."""


class DescriptorError(MeshSimError):
    """Malformed DMA descriptor."""


class ChannelBusyError(MeshSimError):
    """DMA start on a channel that is already running a transfer."""


class ConfigurationError(MeshSimError):
    """Invalid experiment or workgroup configuration."""


class CapacityError(MeshSimError):
    """Data plus code plus stack exceed the per-core scratchpad."""


class LayoutError(MeshSimError):
    """Overlapping or out-of-range scratchpad regions."""


class MembershipError(MeshSimError):
    """Barrier wait by a core that is not a participant."""


class ProtocolError(MeshSimError):
    """Synchronization protocol misuse (e.g. unlock by non-owner)."""


class OrderingError(MeshSimError):
    """Timer stopped before it was started."""


class KernelFault(MeshSimError):
    """A kernel raised; carries the faulting core."""

    def __init__(self, coord, cause):
        super().__init__(f"kernel fault at core {tuple(coord)}: {cause!r}")
        self.coord = coord
        self.cause = cause


class DeadlockError(MeshSimError):
    """No pending events while some kernels are still blocked."""

    def __init__(self, blocked):
        self.blocked = list(blocked)
        desc = "; ".join(f"{tuple(c)}: {why}" for c, why in self.blocked)
        super().__init__(f"deadlock: {len(self.blocked)} blocked kernel(s): {desc}")
