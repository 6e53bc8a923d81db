"""Two-state energy model: an active current while awake, a sleep current
otherwise. Task execution does not raise the draw above the active current,
so per-node energy depends only on awake/sleep seconds."""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_I_ACTIVE_A = 0.260
DEFAULT_I_SLEEP_A = 2.5e-6
DEFAULT_VOLTAGE_V = 3.3  # nominal ESP-32 rail; ratios are voltage-independent


@dataclass(frozen=True)
class EnergyParams:
    i_active_a: float = DEFAULT_I_ACTIVE_A
    i_sleep_a: float = DEFAULT_I_SLEEP_A
    voltage_v: float = DEFAULT_VOLTAGE_V

    def __post_init__(self):
        if self.i_active_a <= 0 or self.i_sleep_a <= 0 or self.voltage_v <= 0:
            raise ValueError("currents and voltage must be strictly positive")
        if self.i_sleep_a >= self.i_active_a:
            raise ValueError("sleep current must be below active current")


def energy_joules(active_s: float, sleep_s: float,
                  params: EnergyParams = EnergyParams()) -> float:
    if active_s < 0 or sleep_s < 0:
        raise ValueError("active_s and sleep_s must be >= 0")
    return params.voltage_v * (params.i_active_a * active_s + params.i_sleep_a * sleep_s)


def reduction_vs_always_on(awake_fraction: float, horizon_s: float = 1.0,
                           params: EnergyParams = EnergyParams()) -> float:
    """Percent energy saved versus running always-on at the active current.

    Independent of horizon and voltage; both appear in the signature only for
    interface symmetry with the joule computation.
    """
    if not (0.0 < awake_fraction <= 1.0):
        raise ValueError("awake_fraction must be in (0, 1]")
    if horizon_s <= 0:
        raise ValueError("horizon_s must be > 0")
    mean_current = awake_fraction * params.i_active_a + (1.0 - awake_fraction) * params.i_sleep_a
    return 100.0 * (1.0 - mean_current / params.i_active_a)


@dataclass
class EnergyReport:
    per_node_j: dict[str, float] = field(default_factory=dict)
    total_j: float = 0.0
    baseline_always_on_j: float = 0.0
    reduction_pct: float = 0.0


def build_report(active_by_node: dict[str, float], horizon_s: float,
                 params: EnergyParams = EnergyParams()) -> EnergyReport:
    """Aggregate per-node awake seconds over a horizon into an energy report."""
    per_node = {
        node: energy_joules(active, max(0.0, horizon_s - active), params)
        for node, active in active_by_node.items()
    }
    total = sum(per_node.values())
    baseline = params.voltage_v * params.i_active_a * horizon_s * max(1, len(active_by_node))
    reduction = 100.0 * (1.0 - total / baseline) if baseline > 0 else 0.0
    return EnergyReport(per_node_j=per_node, total_j=total,
                        baseline_always_on_j=baseline, reduction_pct=reduction)
