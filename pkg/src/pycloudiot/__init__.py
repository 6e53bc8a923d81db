"""PyCloudIoT: FaaS over constrained IoT nodes.

Duty-cycle-aware clustering, dispatcher-side leader election, majority-vote
fault tolerance, MQTT-style messaging, a two-state energy model, and a
deterministic discrete-event simulator that reproduces the protocol's
performance / energy / fault-tolerance trade-offs.
"""

from .bus import DeliveryState, Envelope, SimBus
from .consensus import (Decision, ElectionError, LeaderLease, MembershipEvent,
                        VoteTally, elect_leader, leader_channel,
                        majority_threshold, on_membership_change, tally_vote)
from .digest import digest_value, stable_seed
from .dispatcher import Dispatcher, DispatcherConfig, TaskRecord, TaskState, select_cluster
from .dutycycle import DutyCycleSchedule, active_seconds, awake_windows
from .energy import (EnergyParams, EnergyReport, build_report, energy_joules,
                     reduction_vs_always_on)
from .events import RealTimeScheduler, SimScheduler
from .kernels import UnknownKernelError, backend_name, kernel_digest, kernel_names
from .partitioner import (Cluster, ClusterPlan, choose_cluster_count,
                          compute_cycle_gain, count_plan_cycles, partition,
                          sort_nodes)
from .registry import (NodeDescriptor, NodeStatus, Registry, next_connection)
from .simulation import MetricsReport, Scenario, report_to_csv, run_scenario, sweep
from .worker import (FaultOutcome, FaultProfile, SPEED_CLASSES, TaskResult,
                     TaskSpec, WorkerActor, apply_faults, execute_kernel)

__version__ = "0.1.0"
