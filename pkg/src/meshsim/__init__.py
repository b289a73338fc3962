"""meshsim: deterministic simulator of a 64-core 2D-mesh network-on-chip.

Models an Epiphany-style device at desk scale: 8x8 cores at 600 MHz with
32 KB banked scratchpads, per-core DMA engines, dimension-order routed mesh
networks, and a single contended off-chip link to shared DRAM.  Ships with a
5-point stencil and a three-level matrix-multiplication kernel suite plus a
benchmark harness that checks the simulated numbers against embedded
reference measurements.
"""

from .config import (  # noqa: F401
    DEFAULT_CONFIG,
    CoreMemoryConfig,
    ELinkConfig,
    MatmulCostModel,
    MeshConfig,
    SimConfig,
    StencilCostModel,
    TimingModel,
    load_config,
)
from .mesh import (  # noqa: F401
    Coord,
    NetworkClass,
    TransferMethod,
    TransferRequest,
    crossover_bytes,
    manhattan_distance,
    route,
    transfer_time,
)
from .core import AddressMap, BankLayout, DmaDescriptor, DmaMode, Scratchpad  # noqa: F401
from .runtime import Barrier, HostResult, KernelContext, Mutex, Workgroup, host_run  # noqa: F401
from .engine import Simulator  # noqa: F401
from .elink import UtilizationRecord, contention_experiment  # noqa: F401

__version__ = "0.1.0"
