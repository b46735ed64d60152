"""dyniso: dynamic rank, reachability/distance, and matching engines.

The engines maintain their answers under batched entry or edge changes
via truncated-series low-rank updates, with isolating weight synthesis
supplying the symbolic machinery and built-in brute-force oracles
providing independent verification.
"""

from .errors import DynIsoError

__all__ = ["DynIsoError"]
__version__ = "0.1.0"
