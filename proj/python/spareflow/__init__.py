"""Streaming skeletons and a self-offloading accelerator over lock-free SPSC queues.

The heavy lifting is in the C++ extension ``_spareflow``; this package
re-exports it.
"""

from ._spareflow import (
    CapabilityError,
    ConfigError,
    SpscQueue,
    StateError,
    ValidationError,
    backoff_action,
    emit,
    escape_iterations,
    farm_plan,
    identity_farm,
    logical_core_count,
    mandel_render_acc,
    mandel_render_seq,
    matmul_acc,
    matmul_seq,
    nqueens_acc,
    nqueens_seq,
    nqueens_task_count,
    pass_iteration_limit,
    physical_core_count,
    regions,
    run_bench,
)

__all__ = [
    "CapabilityError",
    "ConfigError",
    "SpscQueue",
    "StateError",
    "ValidationError",
    "backoff_action",
    "emit",
    "escape_iterations",
    "farm_plan",
    "identity_farm",
    "logical_core_count",
    "mandel_render_acc",
    "mandel_render_seq",
    "matmul_acc",
    "matmul_seq",
    "nqueens_acc",
    "nqueens_seq",
    "nqueens_task_count",
    "pass_iteration_limit",
    "physical_core_count",
    "regions",
    "run_bench",
]
