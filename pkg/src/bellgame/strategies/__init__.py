"""Built-in adversaries and reference models, selectable by name."""

from __future__ import annotations

from typing import Any, Callable

from ..errors import InvalidParameter
from ..protocol import Strategy
from .hp import (
    HPHiddenState,
    HPSamples,
    hp_outputs,
    hp_reconstruct_fixed,
    hp_reconstruct_settings,
    hp_sample,
    hp_sample_fixed,
    hp_trials,
)
from .local import (
    ALL_QUADRUPLES,
    BEST_QUADRUPLES,
    DeterministicLHV,
    IIDRandom,
    MemoryLHV,
    always_plus,
    quadruple_value,
)
from .quantum import (
    JointOutcomeDistribution,
    QuantumAngles,
    QuantumCheat,
    QuantumOracle,
    quantum_equal_prob,
    quantum_joint_distribution,
    quantum_oracle_batch,
    quantum_oracle_sample,
)

REGISTRY: dict[str, Callable[..., Strategy]] = {
    "deterministic-lhv": DeterministicLHV,
    "memory-lhv": MemoryLHV,
    "iid-random": IIDRandom,
    "quantum-oracle": QuantumOracle,
    "quantum-cheat": QuantumCheat,
}

LEGAL_STRATEGIES = tuple(name for name, cls in REGISTRY.items() if cls.legal)


def make_strategy(name: str, seed: int = 0, params: dict[str, Any] | None = None) -> Strategy:
    try:
        cls = REGISTRY[name]
    except KeyError:
        raise InvalidParameter(f"unknown strategy {name!r}; choose from {', '.join(REGISTRY)}") from None
    params = dict(params or {})
    if "angles" in params and isinstance(params["angles"], (list, tuple)):
        params["angles"] = QuantumAngles(*params["angles"])
    try:
        return cls(seed=seed, **params)
    except TypeError as exc:
        raise InvalidParameter(f"bad parameters for {name!r}: {exc}") from None


__all__ = [
    "ALL_QUADRUPLES", "BEST_QUADRUPLES", "DeterministicLHV", "HPHiddenState", "HPSamples", "IIDRandom",
    "JointOutcomeDistribution", "LEGAL_STRATEGIES", "MemoryLHV", "QuantumAngles", "QuantumCheat",
    "QuantumOracle", "REGISTRY", "always_plus", "hp_outputs", "hp_reconstruct_fixed",
    "hp_reconstruct_settings", "hp_sample", "hp_sample_fixed", "hp_trials", "make_strategy",
    "quadruple_value", "quantum_equal_prob", "quantum_joint_distribution", "quantum_oracle_batch",
    "quantum_oracle_sample",
]
