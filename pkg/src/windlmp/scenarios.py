"""Wind production scenarios and their probabilities."""

from dataclasses import dataclass
import json
from pathlib import Path

import numpy as np

DEFAULT_PROBS = (0.6, 0.2, 0.2)  # forecast, high, low


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class WindScenario:
    trajectory: tuple
    probability: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "trajectory", tuple(float(v) for v in self.trajectory))
        if any(v < 0 for v in self.trajectory):
            raise ScenarioError(f"scenario {self.label!r}: negative wind production")
        if self.probability < 0:
            raise ScenarioError(f"scenario {self.label!r}: negative probability {self.probability}")


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def horizon(self):
        return len(self.scenarios[0].trajectory)

    @property
    def probabilities(self):
        return np.array([s.probability for s in self.scenarios])

    @property
    def trajectories(self):
        """Array of shape (N_scenarios, horizon)."""
        return np.array([s.trajectory for s in self.scenarios])

    @property
    def labels(self):
        return [s.label or f"w{k + 1}" for k, s in enumerate(self.scenarios)]


def make_scenario_set(scenarios, normalize=False, tol=1e-9):
    """Check (or rescale) probabilities so that they sum to one."""
    scenarios = list(scenarios)
    if not scenarios:
        raise ScenarioError("empty scenario list")
    T = len(scenarios[0].trajectory)
    if any(len(s.trajectory) != T for s in scenarios):
        raise ScenarioError("scenario trajectories differ in length")
    total = sum(s.probability for s in scenarios)
    if normalize:
        if total <= 0:
            raise ScenarioError("probabilities sum to zero")
        scenarios = [WindScenario(s.trajectory, s.probability / total, s.label) for s in scenarios]
    elif abs(total - 1.0) > tol:
        raise ScenarioError(f"probabilities sum to {total:.12g}, expected 1")
    if not normalize and total != 1.0:
        # absorb round-off into the largest scenario so the sum is exact
        k = max(range(len(scenarios)), key=lambda i: scenarios[i].probability)
        rest = sum(s.probability for i, s in enumerate(scenarios) if i != k)
        s = scenarios[k]
        scenarios[k] = WindScenario(s.trajectory, 1.0 - rest, s.label)
    return ScenarioSet(tuple(scenarios))


def uncertainty_sweep(forecast, x, probs=DEFAULT_PROBS):
    """Forecast plus copies scaled by (1 + x/100) and (1 - x/100)."""
    if not 0 <= x <= 100:
        raise ScenarioError(f"x = {x} outside [0, 100]")
    if len(probs) != 3:
        raise ScenarioError("uncertainty_sweep needs three probabilities")
    f = np.asarray(forecast, dtype=float)
    trajs = (f, f * (1 + x / 100.0), f * (1 - x / 100.0))
    return make_scenario_set(WindScenario(t, p, lab)
                             for t, p, lab in zip(trajs, probs, ("forecast", "high", "low")))


def reweight(scen, probs, normalize=False):
    """Same trajectories, new probabilities."""
    if len(probs) != len(scen):
        raise ScenarioError("probability count does not match scenario count")
    return make_scenario_set((WindScenario(s.trajectory, p, s.label)
                              for s, p in zip(scen, probs)), normalize=normalize)


def scale(scen, factor):
    """Scale every trajectory by ``factor`` (used for wind capacity sweeps)."""
    if factor < 0:
        raise ScenarioError("scale factor must be >= 0")
    return ScenarioSet(tuple(WindScenario(tuple(v * factor for v in s.trajectory),
                                          s.probability, s.label) for s in scen))


def expected_trajectory(scen):
    return scen.probabilities @ scen.trajectories


def scenarios_from_list(items, normalize=False):
    try:
        out = [WindScenario(tuple(it["trajectory"]), float(it["probability"]), str(it.get("label", "")))
               for it in items]
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario entry: {exc}") from exc
    return make_scenario_set(out, normalize=normalize)


def load_scenarios(path, probs=None):
    """Read a scenario file: a list of {probability, trajectory} objects.

    A dict with a ``scenarios`` key is accepted too.  ``probs`` overrides the
    stored probabilities.
    """
    p = Path(path)
    if not p.exists():
        from .grid import DATA_DIR
        p = DATA_DIR / f"{path}.json"
        if not p.exists():
            raise FileNotFoundError(f"scenario file not found: {path}")
    doc = json.loads(p.read_text())
    items = doc["scenarios"] if isinstance(doc, dict) else doc
    scen = scenarios_from_list(items)
    if probs is not None:
        scen = reweight(scen, probs)
    return scen


def scenarios_to_list(scen):
    return [{"label": lab, "probability": s.probability, "trajectory": list(s.trajectory)}
            for lab, s in zip(scen.labels, scen)]
