"""Bifurcation diagrams: equilibrium continuation, orbit envelopes, diagram distance."""

from bifurcation.continuation import (
    BifEvent,
    BifurcationSystem,
    EquilibriumBranch,
    EquilibriumPoint,
    continue_equilibria,
    newton,
)
from bifurcation.diagram import (
    BifurcationDiagram,
    DiagramDistance,
    diagram_distance,
    sweep_diagram,
)
from bifurcation.orbits import (
    OrbitExtremaBranch,
    OrbitSample,
    estimate_period,
    orbit_events,
    orbit_extrema,
    sweep_orbits,
)

__all__ = [
    "BifEvent",
    "BifurcationDiagram",
    "BifurcationSystem",
    "DiagramDistance",
    "EquilibriumBranch",
    "EquilibriumPoint",
    "OrbitExtremaBranch",
    "OrbitSample",
    "continue_equilibria",
    "diagram_distance",
    "estimate_period",
    "newton",
    "orbit_events",
    "orbit_extrema",
    "sweep_diagram",
    "sweep_orbits",
]
