"""Application kernels: 5-point stencil and three-level matrix multiplication."""

from .stencil import (  # noqa: F401
    StencilResult,
    StencilWeights,
    stencil_core_cycles,
    stencil_distributed,
    stencil_reference,
    sweep_block,
)
from .matmul import (  # noqa: F401
    CannonResult,
    OffchipResult,
    cannon_multicore,
    half_buffer_plan,
    matmul_core_cycles,
    matmul_reference,
    offchip_matmul,
)
