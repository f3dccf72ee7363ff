"""
Stepwise optimizers: AdamW, Muon and the hybrid MUD optimizer

Parameters and gradients are plain dicts of numpy arrays keyed by name.
Step functions replace entries of the params dict with fresh arrays, so
arrays held by the caller are never mutated. Each ParamGroup owns one
OptimizerState.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, MutableMapping, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ConfigError, ShapeError
from utils.log import get_logger
from whitening.operators import WhitenConfig, mud_whiten, muon_ns

logger = get_logger(__name__)

MATRIX_RULE = "matrix"
ELEMENTWISE_RULE = "elementwise"
OPTIMIZERS = ("adamw", "muon", "mud")
SCALE_COEFF = 0.2

Params = MutableMapping[str, np.ndarray]
Grads = Mapping[str, np.ndarray]


@dataclass
class ParamGroup:
    """Named parameters sharing one update rule and its hyper-parameters"""

    names: List[str]
    kind: str = ELEMENTWISE_RULE
    lr: float = 1e-3
    weight_decay: float = 1e-2
    beta_momentum: float = 0.95
    adam_betas: Tuple[float, float] = (0.9, 0.95)
    eps: float = 1e-8
    mud_passes: int = 1
    ns_iters: int = 5

    def __post_init__(self):
        if self.kind not in (MATRIX_RULE, ELEMENTWISE_RULE):
            raise ConfigError(f"unknown group kind '{self.kind}'")
        if not self.lr > 0.0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for label, beta in (("beta_momentum", self.beta_momentum),
                            ("beta1", self.adam_betas[0]),
                            ("beta2", self.adam_betas[1])):
            if not 0.0 < beta < 1.0:
                raise ConfigError(f"{label} must lie in (0, 1), got {beta}")
        if not self.eps > 0.0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")

    def whiten_config(self) -> WhitenConfig:
        return WhitenConfig(passes=self.mud_passes, ns_iters=self.ns_iters, eps=self.eps)


@dataclass
class OptimizerState:
    """Zero-initialized per-parameter buffers plus the group step counter"""

    momentum: Dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg: Dict[str, np.ndarray] = field(default_factory=dict)
    exp_avg_sq: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def buffer(self, store: Dict[str, np.ndarray], name: str, like: np.ndarray) -> np.ndarray:
        buf = store.get(name)
        if buf is None:
            buf = np.zeros_like(like, dtype=np.float64)
            store[name] = buf
        elif buf.shape != like.shape:
            raise ShapeError("optimizer state", buf.shape, like.shape, detail=f"parameter '{name}'")
        return buf


def _check_grad(name: str, params: Params, grads: Grads) -> np.ndarray:
    if name not in grads:
        raise ConfigError(f"missing gradient for parameter '{name}'")
    g = np.asarray(grads[name], dtype=np.float64)
    if g.shape != params[name].shape:
        raise ShapeError("optimizer step", params[name].shape, g.shape, detail=f"parameter '{name}'")
    return g


def scale_factor(shape: Sequence[int]) -> float:
    """s(W) = 0.2 * sqrt(max(n, m))"""
    return SCALE_COEFF * float(np.sqrt(max(shape[0], shape[1])))


def adamw_step(
    group: ParamGroup, params: Params, grads: Grads, state: OptimizerState, lr_t: float
) -> Params:
    """
    Decoupled-weight-decay Adam with bias correction

    theta <- (1 - lr*wd) theta - lr * m_hat / (sqrt(v_hat) + eps)
    """
    state.step += 1
    beta1, beta2 = group.adam_betas
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step

    for name in group.names:
        g = _check_grad(name, params, grads)
        theta = params[name]
        m = state.buffer(state.exp_avg, name, theta)
        v = state.buffer(state.exp_avg_sq, name, theta)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / correction1
        v_hat = v / correction2
        params[name] = (1.0 - lr_t * group.weight_decay) * theta - lr_t * m_hat / (np.sqrt(v_hat) + group.eps)
    return params


def matrix_direction(G: np.ndarray, state: OptimizerState, name: str, beta: float) -> np.ndarray:
    """Nesterov lookahead: V <- beta V + G, returns G + beta V"""
    V = state.buffer(state.momentum, name, G)
    V *= beta
    V += G
    return G + beta * V


def _decay(theta: np.ndarray, lr_t: float, weight_decay: float) -> np.ndarray:
    return (1.0 - lr_t * weight_decay) * theta


def muon_step(
    group: ParamGroup, params: Params, grads: Grads, state: OptimizerState, lr_t: float
) -> Params:
    """Muon: Newton-Schulz orthogonalized Nesterov momentum, scaled by s(W)"""
    state.step += 1
    cfg = group.whiten_config()
    for name in group.names:
        g = _check_grad(name, params, grads)
        if g.ndim != 2:
            raise ShapeError("muon_step", g.shape, detail=f"parameter '{name}' is not 2-D")
        M = matrix_direction(g, state, name, group.beta_momentum)
        Q = muon_ns(M, cfg).output
        W = params[name]
        params[name] = _decay(W, lr_t, group.weight_decay) - lr_t * scale_factor(W.shape) * Q
    return params


def mud_step(
    group: ParamGroup, params: Params, grads: Grads, state: OptimizerState, lr_t: float
) -> Params:
    """
    MUD: triangular-whitened Nesterov momentum

    2-D parameters take the MUDp direction scaled by s(W); anything else
    falls back to the raw Nesterov direction.
    """
    state.step += 1
    cfg = group.whiten_config()
    for name in group.names:
        g = _check_grad(name, params, grads)
        M = matrix_direction(g, state, name, group.beta_momentum)
        theta = params[name]
        if g.ndim == 2:
            Q = mud_whiten(M, cfg).output
            params[name] = _decay(theta, lr_t, group.weight_decay) - lr_t * scale_factor(theta.shape) * Q
        else:
            params[name] = _decay(theta, lr_t, group.weight_decay) - lr_t * M
    return params


def partition_params(
    named_params: Union[Mapping[str, np.ndarray], Iterable[Tuple[str, np.ndarray]]],
    deny_prefixes: Iterable[str] = (),
) -> Tuple[List[str], List[str]]:
    """
    Split parameter names into matrix-rule and elementwise-rule lists

    Args:
        named_params: Mapping or (name, array) pairs
        deny_prefixes: Name prefixes (embeddings, heads) kept off the matrix rule

    Returns:
        (matrix names, elementwise names), each in input order
    """
    items = named_params.items() if isinstance(named_params, Mapping) else named_params
    deny = tuple(deny_prefixes)
    matrix, elementwise, seen = [], [], set()
    for name, value in items:
        if name in seen:
            raise ConfigError(f"duplicate parameter name '{name}'")
        seen.add(name)
        if np.ndim(value) == 2 and not (deny and name.startswith(deny)):
            matrix.append(name)
        else:
            elementwise.append(name)
    return matrix, elementwise


_STEPS = {
    "adamw": adamw_step,
    "muon": muon_step,
    "mud": mud_step,
}


class HybridOptimizer:
    """
    Matrix group with Muon/MUD (or AdamW), everything else with AdamW

    Group learning rates are relative: a group whose lr equals base_lr
    steps with the scheduled lr_t unchanged.
    """

    def __init__(self, name: str, groups: List[Tuple[ParamGroup, str]], base_lr: float):
        if name not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer '{name}', expected one of {OPTIMIZERS}")
        self.name = name
        self.groups = groups
        self.base_lr = base_lr
        self.states = [OptimizerState() for _ in groups]

    @property
    def step_count(self) -> int:
        return max((state.step for state in self.states), default=0)

    def step(self, params: Params, grads: Grads, lr_t: float) -> Params:
        for (group, rule), state in zip(self.groups, self.states):
            if not group.names:
                continue
            _STEPS[rule](group, params, grads, state, lr_t * group.lr / self.base_lr)
        return params


def build_optimizer(
    name: str,
    params: Mapping[str, np.ndarray],
    lr: float = 1e-3,
    weight_decay: float = 1e-2,
    adam_betas: Tuple[float, float] = (0.9, 0.95),
    beta_momentum: float = 0.95,
    eps: float = 1e-8,
    mud_passes: int = 1,
    ns_iters: int = 5,
    deny_prefixes: Iterable[str] = (),
    matrix_lr: Optional[float] = None,
) -> HybridOptimizer:
    """
    Assemble an optimizer over named parameters

    Args:
        name: "adamw", "muon" or "mud"
        params: The parameters to optimize
        matrix_lr: Peak lr of the matrix group, defaults to lr

    Returns:
        A HybridOptimizer with its groups partitioned
    """
    name = name.lower()
    if name not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer '{name}', expected one of {OPTIMIZERS}")

    shared = dict(
        weight_decay=weight_decay,
        adam_betas=tuple(adam_betas),
        beta_momentum=beta_momentum,
        eps=eps,
        mud_passes=mud_passes,
        ns_iters=ns_iters,
    )
    if name == "adamw":
        everything = ParamGroup(names=list(params), kind=ELEMENTWISE_RULE, lr=lr, **shared)
        groups = [(everything, "adamw")]
    else:
        matrix, other = partition_params(params, deny_prefixes)
        groups = [
            (ParamGroup(names=matrix, kind=MATRIX_RULE, lr=matrix_lr or lr, **shared), name),
            (ParamGroup(names=other, kind=ELEMENTWISE_RULE, lr=lr, **shared), "adamw"),
        ]
    logger.info(
        f"🔧 {name} optimizer: "
        + ", ".join(f"{rule}[{len(g.names)}]" for g, rule in groups)
    )
    return HybridOptimizer(name, groups, base_lr=lr)
