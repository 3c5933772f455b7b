"""Latency-aware resource allocation for a three-user mobile edge generation and computing system."""

from .agent import AgentConfig, DdpgAgent, ReplayBuffer, TrainingLog, train
from .baselines import fra_policy, oracle_per_slot, rra_policy
from .config import ExperimentConfig, parse_config
from .env import EnvConfig, MegcEnv, State, project_action, sample_tasks
from .latency import Action, LatencyBreakdown, slot_latency
from .system import ChannelState, SystemParams, TaskArrivals, backhaul_rate, offload_rate, sample_channel

__version__ = "0.1.0"
