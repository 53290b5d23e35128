"""Evaluation metrics and significance testing for policy comparisons."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path


def acceptance_ratio(accepted: int, denied: int) -> float:
    """Fraction of requests that were fulfilled."""
    total = accepted + denied
    if total <= 0:
        raise ValueError("need at least one request")
    return accepted / total


def marginal_performance(acceptance: float, baseline: float) -> float:
    """Fraction of the remaining headroom above the baseline that was captured.

    (acceptance - baseline) / (1 - baseline); equals 1 exactly when the
    treatment accepts everything.
    """
    if not 0.0 <= baseline < 1.0:
        raise ValueError("baseline must lie in [0, 1)")
    if not 0.0 <= acceptance <= 1.0:
        raise ValueError("acceptance must lie in [0, 1]")
    return (acceptance - baseline) / (1.0 - baseline)


def distance_reduction(base: float, new: float) -> float:
    """Fractional drop in total distance relative to the baseline."""
    if base <= 0:
        raise ValueError("baseline distance must be positive")
    return (base - new) / base


def normal_cdf(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class ZTestResult:
    z: float
    p_one_sided: float


def two_proportion_z_test(acc1: int, n1: int, acc2: int, n2: int) -> ZTestResult:
    """Pooled two-proportion z-test of sample 2 exceeding sample 1.

    z = (p2 - p1) / sqrt(pp (1 - pp) (1/n1 + 1/n2)) with the pooled proportion
    pp = (acc1 + acc2) / (n1 + n2); p is the one-sided upper tail. No
    continuity correction.
    """
    if n1 <= 0 or n2 <= 0:
        raise ValueError("sample sizes must be positive")
    if not 0 <= acc1 <= n1 or not 0 <= acc2 <= n2:
        raise ValueError("successes cannot exceed sample size")
    p1 = acc1 / n1
    p2 = acc2 / n2
    pooled = (acc1 + acc2) / (n1 + n2)
    variance = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if variance <= 0.0:
        raise ValueError("pooled variance is zero; proportions are degenerate")
    z = (p2 - p1) / math.sqrt(variance)
    return ZTestResult(z=z, p_one_sided=1.0 - normal_cdf(z))


@dataclass
class RunSummary:
    """The slice of a simulation report that comparisons need."""

    policy: str
    accepted: int
    denied: int
    acceptance_ratio: float
    total_distance: float

    @classmethod
    def from_report_dict(cls, d: dict) -> "RunSummary":
        return cls(
            policy=d.get("policy", "?"),
            accepted=int(d["accepted"]),
            denied=int(d["denied"]),
            acceptance_ratio=float(d["acceptance_ratio"]),
            total_distance=float(d["total_distance"]),
        )

    @property
    def n_requests(self) -> int:
        return self.accepted + self.denied

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "accepted": self.accepted,
            "denied": self.denied,
            "acceptance_ratio": self.acceptance_ratio,
            "total_distance": self.total_distance,
        }


@dataclass
class ComparisonReport:
    baseline: RunSummary
    treatment: RunSummary
    delta_mp_acceptance: float
    distance_reduction_fraction: float
    z: float
    p_one_sided: float

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline.to_dict(),
            "treatment": self.treatment.to_dict(),
            "delta_mp_acceptance": self.delta_mp_acceptance,
            "distance_reduction_fraction": self.distance_reduction_fraction,
            "z": self.z,
            "p_one_sided": self.p_one_sided,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    def as_table(self) -> str:
        """Plain-text metrics table for terminal output."""
        b, t = self.baseline, self.treatment
        rows = [
            ("Metric", b.policy, t.policy),
            ("Total accepted requests", str(b.accepted), str(t.accepted)),
            ("Total denied requests", str(b.denied), str(t.denied)),
            ("Overall acceptance ratio", f"{b.acceptance_ratio:.2f}", f"{t.acceptance_ratio:.2f}"),
            ("Total units traveled", f"{b.total_distance:,.0f}", f"{t.total_distance:,.0f}"),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
        lines.insert(1, "-" * (sum(widths) + 4))
        lines.append("-" * (sum(widths) + 4))
        lines.append(f"Marginal performance (acceptance): {self.delta_mp_acceptance:.1%}")
        lines.append(f"Distance reduction: {self.distance_reduction_fraction:.2%}")
        lines.append(f"z = {self.z:.2f}, one-sided p = {self.p_one_sided:.4g}")
        return "\n".join(lines)


def compare_runs(baseline: RunSummary, treatment: RunSummary) -> ComparisonReport:
    """Marginal performance, distance reduction, and z-test for two runs."""
    if baseline.acceptance_ratio == treatment.acceptance_ratio:
        z, p = 0.0, 0.5
    else:
        result = two_proportion_z_test(
            baseline.accepted, baseline.n_requests, treatment.accepted, treatment.n_requests
        )
        z, p = result.z, result.p_one_sided
    return ComparisonReport(
        baseline=baseline,
        treatment=treatment,
        delta_mp_acceptance=marginal_performance(
            treatment.acceptance_ratio, baseline.acceptance_ratio
        ),
        distance_reduction_fraction=distance_reduction(
            baseline.total_distance, treatment.total_distance
        ),
        z=z,
        p_one_sided=p,
    )
