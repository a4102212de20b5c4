"""Deterministic LAN simulator for legacy and secure address resolution and assignment.

Legacy ARP and DHCP run beside S-UARP (unicast resolution against a keyed
server, in Base, AltV1 and AltV2 forms, plus a static-registration mode)
and S-DHCP (keyed leases, same three forms).  Attackers, capture statistics
and a command line sit on top.
"""

from .errors import ConfigError, SuarpSimError
from .model import TimerConfig
from .netsim import Host, Router, Simulator, TraceLog
from .scenario import build_scenario, load_scenario

__all__ = ["ConfigError", "Host", "Router", "Simulator", "SuarpSimError", "TimerConfig", "TraceLog",
           "build_scenario", "load_scenario"]
__version__ = "0.1.0"
