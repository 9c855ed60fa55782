"""Deterministic write-only ORAM for oblivious demand paging.

Three engines share one store layout and trusted metadata:

* :class:`DetWoOram` - base engine, one holding write plus K main refreshes per write
* :class:`EagerDetWoOram` - refreshes the next round in the background
* :class:`ParallelDetWoOram` - splits each round's refreshes over T threads
"""

from .adversary import ObserverView, Verdict, check_expected, leak_test, observe
from .costs import CostModel, VirtualClock
from .eager import EagerDetWoOram, Lifecycle, PreloadBuffer
from .errors import *  # noqa: F401,F403
from .geometry import (OramConfig, OramState, expected_write_set, expected_writes,
                       holding_slot, new_config, refresh_indices, refresh_range)
from .pager import Metrics, Pager, PagerConfig, PlainBackend, run_workload
from .parallel import ParallelDetWoOram, RefreshPartition, partition
from .sealer import SealedSlot, SealKeys, next_nonce, seal, unseal
from .store import AccessTrace, BackingStore, Snapshot, diff
from .woram import DetWoOram, state_audit

__version__ = "0.1.0"
