"""Derivative-free pulse-coefficient optimization by a genetic algorithm.

The search maximizes the deterministic noise-free gate fidelity over a named
parameter space with bounds; anything not freed stays at its seed value.
Search-time objective evaluations may run at a relaxed integrator setting,
with the returned best point re-scored at the reporting setting.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import Propagation
from .gate import gate_fidelity_value
from .pulses import BluePulse, DetuningWaveform, PulseSet, RedPulse

#: optimizable coefficients: name -> (pulse part, attribute)
PARAMETERS = {
    "red_peak": ("red", "omega_max"),
    "red_width": ("red", "width"),
    "blue_gauss": ("blue", "omega_gauss"),
    "blue_width": ("blue", "width"),
    "blue_offset": ("blue", "offset"),
    "delta0": ("detuning", "d0"),
    "delta1": ("detuning", "d1"),
    "delta2": ("detuning", "d2"),
}


@dataclass(frozen=True)
class SearchSpace:
    """Free parameters with bounds; everything else frozen at the seed pulses."""

    seed_pulses: PulseSet
    bounds: dict          # name -> (lo, hi) in internal units (rad/us, us)

    def __post_init__(self):
        for name, (lo, hi) in self.bounds.items():
            if name not in PARAMETERS:
                raise ValueError(f"unknown search parameter {name!r}; "
                                 f"valid: {sorted(PARAMETERS)}")
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")

    @property
    def names(self):
        return tuple(self.bounds)

    def seed_genome(self):
        vals = []
        for name in self.names:
            part, attr = PARAMETERS[name]
            val = getattr(getattr(self.seed_pulses, part), attr)
            lo, hi = self.bounds[name]
            vals.append(min(max(val, lo), hi))
        return np.array(vals)

    def clamp(self, genome):
        lo = np.array([self.bounds[n][0] for n in self.names])
        hi = np.array([self.bounds[n][1] for n in self.names])
        return np.minimum(np.maximum(genome, lo), hi)

    def to_pulses(self, genome):
        red = self.seed_pulses.red
        blue = self.seed_pulses.blue
        det = self.seed_pulses.detuning
        updates = {"red": {}, "blue": {}, "detuning": {}}
        for name, value in zip(self.names, genome):
            part, attr = PARAMETERS[name]
            updates[part][attr] = float(value)
        if updates["red"]:
            red = replace(red, **updates["red"])
        if updates["blue"]:
            if blue.mode != "gaussian_offset" and (
                "omega_gauss" in updates["blue"] or "width" in updates["blue"]
                or "offset" in updates["blue"]
            ):
                blue = BluePulse("gaussian_offset", blue.gate_time,
                                 omega_gauss=0.0, width=0.1, offset=0.0)
            blue = replace(blue, **updates["blue"])
        if updates["detuning"]:
            if det.mode != "modulated":
                det = DetuningWaveform("modulated", det.gate_time)
            det = replace(det, **updates["detuning"])
        return PulseSet(red=red, blue=blue, detuning=det,
                        delta_big=self.seed_pulses.delta_big)


@dataclass(frozen=True)
class GAConfig:
    population: int = 64
    generations: int = 200
    crossover_rate: float = 0.7
    mutation_scale: float = 0.05     # fraction of bound width
    mutation_decay: float = 0.98     # per-generation scale decay
    elitism: int = 2
    tournament: int = 3
    seed: int = 1
    eval_budget: int = 10000
    target_fidelity: float = None    # early stop when best reaches this
    search_rtol: float = 1e-7        # relaxed objective tolerance
    final_rtol: float = 1e-9         # re-scoring tolerance

    def __post_init__(self):
        if self.population < 8:
            raise ValueError("population must be at least 8")
        if not math.isfinite(self.eval_budget):
            raise ValueError("evaluation budget must be finite")


@dataclass
class OptimizeResult:
    best_params: dict
    best_fidelity: float             # re-scored at final settings
    best_fidelity_search: float      # as seen by the search objective
    trace: list                      # (generation, best_f, mean_f)
    evaluations: int
    pulses: PulseSet = None


def evaluate_genome(genome, space, model, propagation, metric="uhlmann"):
    """Deterministic fidelity of one genome (clamped into bounds)."""
    import warnings

    clamped = space.clamp(np.asarray(genome, dtype=float))
    if np.any(clamped != np.asarray(genome, dtype=float)):
        warnings.warn("genome outside bounds; clamped", stacklevel=2)
    pulses = space.to_pulses(clamped)
    try:
        return gate_fidelity_value(pulses, model, propagation, metric=metric)
    except Exception:
        return 0.0   # integrator failure scores zero, the search continues


def optimize(space, ga, model, propagation=None, metric="uhlmann",
             extra_seeds=(), progress=None):
    """GA maximization of gate fidelity over the search space.

    Tournament selection, uniform crossover, decaying Gaussian mutation, and
    elitism; deterministic for a fixed (space, ga, seed).  ``extra_seeds``
    injects known-good genomes into the initial population (staged searches
    re-optimize starting from the previous stage's optimum).
    """
    rng = np.random.default_rng(ga.seed)
    search_prop = propagation or Propagation(method="magnus", sample_points=0)
    search_prop = replace(search_prop, rtol=ga.search_rtol)
    n_par = len(space.names)
    lo = np.array([space.bounds[n][0] for n in space.names])
    hi = np.array([space.bounds[n][1] for n in space.names])
    width = hi - lo

    pop = rng.uniform(lo, hi, size=(ga.population, n_par))
    pop[0] = space.seed_genome()
    for i, g in enumerate(extra_seeds):
        pop[1 + i] = space.clamp(np.asarray(g, dtype=float))

    def score(genome):
        return evaluate_genome(genome, space, model, search_prop, metric)

    evals = 0
    fitness = np.empty(ga.population)
    for i in range(ga.population):
        fitness[i] = score(pop[i])
        evals += 1

    best_idx = int(fitness.argmax())
    best_genome = pop[best_idx].copy()
    best_f = float(fitness[best_idx])
    trace = [(0, best_f, float(fitness.mean()))]
    scale = ga.mutation_scale

    for gen in range(1, ga.generations + 1):
        if ga.target_fidelity is not None and best_f >= ga.target_fidelity:
            break
        if evals >= ga.eval_budget:
            break
        new_pop = np.empty_like(pop)
        order = np.argsort(fitness)[::-1]
        new_pop[:ga.elitism] = pop[order[:ga.elitism]]
        for i in range(ga.elitism, ga.population):
            # tournament selection of two parents
            parents = []
            for _ in range(2):
                contenders = rng.integers(0, ga.population, size=ga.tournament)
                parents.append(pop[contenders[np.argmax(fitness[contenders])]])
            # uniform crossover
            child = parents[0].copy()
            if rng.random() < ga.crossover_rate:
                take = rng.random(n_par) < 0.5
                child[take] = parents[1][take]
            # Gaussian mutation
            child = child + rng.standard_normal(n_par) * scale * width
            new_pop[i] = space.clamp(child)
        pop = new_pop
        new_fitness = np.empty(ga.population)
        new_fitness[:ga.elitism] = fitness[order[:ga.elitism]]
        for i in range(ga.elitism, ga.population):
            if evals >= ga.eval_budget:
                new_fitness[i] = -1.0
                continue
            new_fitness[i] = score(pop[i])
            evals += 1
        fitness = new_fitness
        gen_best = int(fitness.argmax())
        if fitness[gen_best] > best_f:
            best_f = float(fitness[gen_best])
            best_genome = pop[gen_best].copy()
        trace.append((gen, best_f, float(fitness[fitness >= 0].mean())))
        scale *= ga.mutation_decay
        if progress is not None and gen % progress == 0:
            print(f"  gen {gen}: best={best_f:.6f} evals={evals}", flush=True)

    final_prop = replace(search_prop, method="adaptive_rk", rtol=ga.final_rtol)
    final_f = evaluate_genome(best_genome, space, model, final_prop, metric)
    best_pulses = space.to_pulses(space.clamp(best_genome))
    return OptimizeResult(
        best_params=dict(zip(space.names, best_genome)),
        best_fidelity=float(final_f),
        best_fidelity_search=best_f,
        trace=trace,
        evaluations=evals,
        pulses=best_pulses,
    )
