"""Swarm-based drone delivery composition over skyway networks."""

from .baselines import brute_force_oracle, dijkstra_baseline
from .energy import ChargeDemand, DronePerformance, NodeTimeBreakdown, node_time
from .errors import SkyswarmError
from .itinerary import Itinerary, Leg, validate_itinerary
from .network import SkywayNetwork, generate_random_network, load_network, save_network
from .planner import PlannerConfig, compose_parallel, compose_sequential
from .swarm import DeliveryRequest, Drone, SubSwarm, build_swarm

__all__ = [
    "ChargeDemand", "DeliveryRequest", "Drone", "DronePerformance", "Itinerary", "Leg", "NodeTimeBreakdown",
    "PlannerConfig", "SkyswarmError", "SkywayNetwork", "SubSwarm", "brute_force_oracle", "build_swarm",
    "compose_parallel", "compose_sequential", "dijkstra_baseline", "generate_random_network", "load_network",
    "node_time", "save_network", "validate_itinerary",
]
