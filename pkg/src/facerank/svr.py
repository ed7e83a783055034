"""Linear nu-SVR trained on pair-difference features.

The regressor is the linear model m(f) = w . f + b fitted so that the
prediction on a composed pair approximates the difference of the two
ground-truth importance scores.

Dual problem
------------
With rows x_1..x_l, targets z, box bound C and fraction parameter nu, the
solver minimizes over alpha, alpha* in [0, C]^l

    0.5 * (alpha - alpha*)' Q (alpha - alpha*) + z' (alpha - alpha*)

subject to  sum(alpha - alpha*) = 0  and  sum(alpha + alpha*) = C * nu * l,
with Q_ij = x_i . x_j. The tube width epsilon is not a parameter; it is
recovered from the multiplier of the second constraint.

The two equality constraints fix the sum of each block (alpha and alpha*)
separately, so sequential pairwise coordinate steps stay feasible exactly
when the two updated variables belong to the same block. Each iteration
picks the maximal KKT-violating pair within the worse block and moves it
to the constrained minimum along that direction. Exact ties break toward
the lowest index, which makes training deterministic.

Convergence requires both the KKT violation and the primal-dual gap to
fall below the configured tolerance; when the KKT test passes but the gap
is still loose the internal threshold is tightened and iteration resumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, LengthMismatch, ParseError, StateUnavailable
from .features import LAYOUT_VERSION

DEFAULT_C_GRID = tuple(2.0**k for k in (-6, -4, -2, 0, 2, 4, 6))
_CURVATURE_FLOOR = 1e-12
_MIN_KKT_THRESHOLD = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    C: float = 1.0
    nu: float = 0.5
    tolerance: float = 1e-4
    max_iterations: int = 100_000
    seed: int = 42

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class TrainingSet:
    """Pair-difference rows with targets (score_a - score_b)."""

    features: np.ndarray  # (l, d)
    targets: np.ndarray  # (l,)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2:
            raise DegenerateInput(f"features must be 2D, got shape {self.features.shape}")
        if self.targets.shape != (self.features.shape[0],):
            raise LengthMismatch(
                f"{self.features.shape[0]} rows but {self.targets.shape} targets"
            )
        if not np.isfinite(self.features).all() or not np.isfinite(self.targets).all():
            raise DegenerateInput("training data contains non-finite values")


@dataclass
class DualState:
    """Solver internals retained on the in-memory model for diagnostics."""

    beta: np.ndarray  # (2l,) stacked [alpha, alpha*]
    features: np.ndarray  # standardized rows the solve ran on
    targets: np.ndarray


@dataclass
class Diagnostics:
    iterations: int = 0
    converged: bool = False
    kkt_violation: float = float("inf")
    duality_gap: float = float("inf")
    dual_objective: float = 0.0
    epsilon: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_violation": self.kkt_violation,
            "duality_gap": self.duality_gap,
            "dual_objective": self.dual_objective,
            "epsilon": self.epsilon,
        }


@dataclass
class RegressionModel:
    """Linear model plus the standardization that produced it.

    ``weights``/``bias`` act on raw feature space: predict(f) = weights.f + bias.
    ``std_mean``/``std_scale`` record the per-dimension standardization
    computed on the training rows; ``solver_weights``/``solver_bias`` are the
    solution in standardized space.
    """

    weights: np.ndarray
    bias: float
    std_mean: np.ndarray
    std_scale: np.ndarray
    solver_weights: np.ndarray
    solver_bias: float
    config: SolverConfig
    diagnostics: Diagnostics
    layout: str = LAYOUT_VERSION
    dual_state: DualState | None = field(default=None, repr=False, compare=False)


@dataclass
class DualSolution:
    beta: np.ndarray
    weights: np.ndarray
    bias: float
    diagnostics: Diagnostics
    objective_trace: list[float] | None = None


def solve_dual(
    X: np.ndarray,
    z: np.ndarray,
    cfg: SolverConfig,
    record_objective: bool = False,
    warm_beta: np.ndarray | None = None,
) -> DualSolution:
    """Solve the nu-SVR dual on the given rows (no standardization).

    ``record_objective`` appends the dual objective (maximization
    convention) after every pairwise step, for monotonicity checks.
    ``warm_beta`` seeds the iterate from a solve of the same rows at a
    different C (it is rescaled so both block sums land on this C's
    budget), which shortens solves along a C grid.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    l, d = X.shape
    C, nu = cfg.C, cfg.nu

    budget = C * nu * l / 2.0
    if warm_beta is not None and warm_beta.shape == (2 * l,) and warm_beta[:l].sum() > 0:
        beta = warm_beta * (budget / warm_beta[:l].sum())
        np.clip(beta, 0.0, C, out=beta)
        drift = abs(beta[:l].sum() - budget) + abs(beta[l:].sum() - budget)
        if drift > 1e-9 * max(budget, 1.0):  # clip broke the block sums; start cold
            beta = None
    else:
        beta = None
    if beta is None:
        # block budget from the nu constraint, filled greedily like a waterline
        beta = np.zeros(2 * l)
        remaining = budget
        for k in range(l):
            take = min(remaining, C)
            beta[k] = beta[l + k] = take
            remaining -= take
            if remaining <= 0.0:
                break

    def recompute_state():
        delta = beta[:l] - beta[l:]
        wt = X.T @ delta  # = -w
        u = X @ wt + z
        return delta, wt, np.concatenate([u, -u])

    delta, wt, g = recompute_state()
    row_sq = np.einsum("ij,ij->i", X, X)

    def block_violation(lo: int):
        """(violation, up_index, down_index) for block [lo, lo + l).

        The up index is the maximal KKT violator on the increase side; the
        down index maximizes the second-order gain of the pairwise step
        (the first-order violation is still what the stopping test uses).
        """
        b = beta[lo : lo + l]
        gb = g[lo : lo + l]
        can_up = b < C
        can_down = b > 0.0
        if not can_up.any() or not can_down.any():
            return -np.inf, -1, -1
        up = int(np.where(can_up, gb, np.inf).argmin())
        violation = float(np.where(can_down, gb, -np.inf).max() - gb[up])
        if violation <= 0.0:
            return violation, -1, -1
        d_g = gb - gb[up]
        curv = np.maximum(row_sq + row_sq[up] - 2.0 * (X @ X[up]), _CURVATURE_FLOOR)
        gain = np.where(can_down & (d_g > 0.0), d_g * d_g / curv, -np.inf)
        down = int(gain.argmax())
        return violation, lo + up, lo + down

    def dual_objective_min() -> float:
        return 0.5 * float(wt @ wt) + float(z @ delta)

    def primal_and_recovery():
        """Recover (b, eps) from KKT brackets, return (primal, b, eps)."""
        w = -wt
        pred = X @ w
        rs = []
        for lo in (0, l):
            b = beta[lo : lo + l]
            gb = g[lo : lo + l]
            free = (b > 0.0) & (b < C)
            if free.any():
                rs.append(float(gb[free].mean()))
                continue
            lower = float(gb[b >= C].max()) if (b >= C).any() else -np.inf
            upper = float(gb[b <= 0.0].min()) if (b <= 0.0).any() else np.inf
            if np.isinf(lower):
                rs.append(upper)
            elif np.isinf(upper):
                rs.append(lower)
            else:
                rs.append((lower + upper) / 2.0)
        r1, r2 = rs
        bias = (r1 - r2) / 2.0
        eps = max(0.0, -(r1 + r2) / 2.0)
        resid = pred + bias - z
        xi_up = np.maximum(0.0, resid - eps)
        xi_down = np.maximum(0.0, -resid - eps)
        primal = 0.5 * float(w @ w) + C * (nu * l * eps + float(xi_up.sum() + xi_down.sum()))
        return primal, bias, eps

    diags = Diagnostics()
    threshold = cfg.tolerance
    iterations = 0
    converged = False
    bias = eps = 0.0
    gap = float("inf")
    trace: list[float] | None = [] if record_objective else None

    while iterations < cfg.max_iterations:
        v_pos, i_pos, j_pos = block_violation(0)
        v_neg, i_neg, j_neg = block_violation(l)
        violation = max(v_pos, v_neg)
        if violation <= threshold:
            # refresh the gradient to shed incremental drift, then re-test
            delta, wt, g = recompute_state()
            v_pos, i_pos, j_pos = block_violation(0)
            v_neg, i_neg, j_neg = block_violation(l)
            violation = max(v_pos, v_neg)
            if violation <= threshold:
                dual_min = dual_objective_min()
                primal, bias, eps = primal_and_recovery()
                gap = primal + dual_min  # primal - (-dual_min)
                if gap <= cfg.tolerance or threshold <= _MIN_KKT_THRESHOLD:
                    converged = gap <= cfg.tolerance
                    break
                threshold = max(threshold / 4.0, _MIN_KKT_THRESHOLD)
                continue

        if v_pos >= v_neg:
            i, j, sign = i_pos, j_pos, 1.0
        else:
            i, j, sign = i_neg, j_neg, -1.0
        mi, mj = i % l, j % l
        diff = X[mi] - X[mj]
        curv = max(float(diff @ diff), _CURVATURE_FLOOR)
        step = min(float(g[j] - g[i]) / curv, C - beta[i], beta[j])
        beta[i] += step
        beta[j] -= step
        delta[mi] += sign * step
        delta[mj] -= sign * step
        wt += sign * step * diff
        du = X @ (sign * step * diff)
        g[:l] += du
        g[l:] -= du
        iterations += 1
        if trace is not None:
            trace.append(-(0.5 * float(wt @ wt) + float(z @ delta)))
    else:
        # iteration cap: report honest diagnostics at the final iterate
        delta, wt, g = recompute_state()
        v_pos, *_ = block_violation(0)
        v_neg, *_ = block_violation(l)
        violation = max(v_pos, v_neg)
        primal, bias, eps = primal_and_recovery()
        gap = primal + dual_objective_min()

    diags.iterations = iterations
    diags.converged = converged
    diags.kkt_violation = max(violation, 0.0)
    diags.duality_gap = gap
    diags.dual_objective = -dual_objective_min()
    diags.epsilon = eps
    return DualSolution(
        beta=beta, weights=-wt, bias=bias, diagnostics=diags, objective_trace=trace
    )


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and scale; near-constant dimensions keep scale 1."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    return mean, scale


def train(
    data: TrainingSet, cfg: SolverConfig | None = None, warm_beta: np.ndarray | None = None
) -> RegressionModel:
    """Standardize, solve the dual, and package the linear model.

    Hitting the iteration cap leaves diagnostics.converged False but still
    returns the best iterate; callers decide whether that is acceptable.
    """
    cfg = cfg or SolverConfig()
    X_raw, z = data.features, data.targets
    l, d = X_raw.shape
    if l < 2 or d == 0:
        raise DegenerateInput(f"need >= 2 rows and >= 1 feature, got {l} x {d}")

    mean, scale = standardize_fit(X_raw)
    X = (X_raw - mean) / scale

    sol = solve_dual(X, z, cfg, warm_beta=warm_beta)

    weights = sol.weights / scale
    bias = sol.bias - float(weights @ mean)
    return RegressionModel(
        weights=weights,
        bias=bias,
        std_mean=mean,
        std_scale=scale,
        solver_weights=sol.weights,
        solver_bias=sol.bias,
        config=cfg,
        diagnostics=sol.diagnostics,
        dual_state=DualState(beta=sol.beta, features=X, targets=z.copy()),
    )


def predict(model: RegressionModel, values) -> float:
    """weights . f + bias for one pair-difference vector."""
    f = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if f.shape != model.weights.shape:
        raise LengthMismatch(f"expected {model.weights.shape[0]} features, got {f.shape}")
    return float(model.weights @ f + model.bias)


def predict_rows(model: RegressionModel, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.weights.shape[0]:
        raise LengthMismatch(f"expected (n, {model.weights.shape[0]}) rows, got {rows.shape}")
    return rows @ model.weights + model.bias


def score_individuals(model: RegressionModel, face_vectors) -> list[float]:
    """Per-face scores from the pairwise model.

    score(p) = mean over other faces q of predict(phi(p) - phi(q)); a lone
    face scores 0. Output order matches input order.
    """
    mats = np.array([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in face_vectors])
    n = len(mats)
    if n == 0:
        return []
    if n == 1:
        return [0.0]
    scores = []
    for k in range(n):
        diffs = mats[k] - np.delete(mats, k, axis=0)
        scores.append(float(np.mean(predict_rows(model, diffs))))
    return scores


def duality_gap(model: RegressionModel, data: TrainingSet) -> float:
    """Primal minus dual objective at the retained dual iterate; >= -1e-9."""
    state = model.dual_state
    if state is None:
        raise StateUnavailable("model carries no dual state (reloaded from file?)")
    X, z = state.features, state.targets
    if data.features.shape[0] != X.shape[0]:
        raise LengthMismatch("data does not match the retained training rows")
    l = X.shape[0]
    C, nu = model.config.C, model.config.nu
    delta = state.beta[:l] - state.beta[l:]
    w = -(X.T @ delta)
    dual = -(0.5 * float(w @ w) + float(z @ delta))
    eps = model.diagnostics.epsilon
    resid = X @ w + model.solver_bias - z
    xi_up = np.maximum(0.0, resid - eps)
    xi_down = np.maximum(0.0, -resid - eps)
    primal = 0.5 * float(w @ w) + C * (nu * l * eps + float(xi_up.sum() + xi_down.sum()))
    return primal - dual


def save_model(model: RegressionModel, path: str):
    """Text round-trip of everything except the transient dual state."""
    doc = {
        "layout": model.layout,
        "std_mean": model.std_mean.tolist(),
        "std_scale": model.std_scale.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "solver_weights": model.solver_weights.tolist(),
        "solver_bias": model.solver_bias,
        "config": {
            "C": model.config.C,
            "nu": model.config.nu,
            "tolerance": model.config.tolerance,
            "max_iterations": model.config.max_iterations,
            "seed": model.config.seed,
        },
        "diagnostics": model.diagnostics.to_dict(),
    }
    import os

    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path: str) -> RegressionModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read model {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed model file {path!r}: {exc}") from None
    try:
        cfg = SolverConfig(**doc["config"])
        diags = Diagnostics(**doc["diagnostics"])
        return RegressionModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            std_mean=np.array(doc["std_mean"], dtype=np.float64),
            std_scale=np.array(doc["std_scale"], dtype=np.float64),
            solver_weights=np.array(doc["solver_weights"], dtype=np.float64),
            solver_bias=float(doc["solver_bias"]),
            config=cfg,
            diagnostics=diags,
            layout=str(doc.get("layout", LAYOUT_VERSION)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model file {path!r} missing fields: {exc}") from None
