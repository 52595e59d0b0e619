"""Radiation-dose conversions and the utility-table composite score."""

from dataclasses import dataclass

__all__ = ["FractionPlan", "total_dose", "mld", "bed", "utility_score"]


@dataclass(frozen=True)
class FractionPlan:
    """A fractionated radiation plan; ratio bridges lesion and liver dose."""

    n_fractions: int
    dose_per_fraction: float  # Gy
    ratio: float = 1.0

    def __post_init__(self):
        if self.n_fractions < 1:
            raise ValueError("n_fractions must be a positive integer")
        if self.dose_per_fraction <= 0:
            raise ValueError("dose_per_fraction must be positive")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError("ratio must lie in [0, 1]")


def total_dose(plan: FractionPlan) -> float:
    return plan.n_fractions * plan.dose_per_fraction


def mld(plan: FractionPlan) -> float:
    """Mean liver dose in Gy."""
    return (total_dose(plan) * plan.ratio
            * (plan.dose_per_fraction * plan.ratio + 2.5) / (2.0 + 2.5))


def bed(plan: FractionPlan) -> float:
    """Biologically effective dose in Gy."""
    return total_dose(plan) * (plan.dose_per_fraction / 10.0 + 1.0)


def utility_score(p_tox: float, p_lp: float, w: float) -> float:
    """Composite utility: 1 - p_tox*w - p_lp*(1-w).

    All arguments are probabilities/weights in [0, 1].
    """
    for name, v in (("p_tox", p_tox), ("p_lp", p_lp), ("w", w)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return 1.0 - p_tox * w - p_lp * (1.0 - w)
