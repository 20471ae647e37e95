"""
Small MLP (optionally conv-led) networks evaluated on a GradTape, and the
online/target pair used by the joint-embedding methods.

Parameters live in ordered ``name -> array`` dicts. Linear weights are
input x output; conv weights are kept in their (S*H*C_in) x C_out reshape so
the orthogonality penalties act on them directly.
"""

from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from cogents_core.utils import get_logger
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.regularizers.models import LayerKind, LayerSpec
from orthoreg.tensor import GradTape, Matrix, Var, conv_unreshape, im2col

from .models import ConvConfig, TrainConfig

logger = get_logger(__name__)

Params = Dict[str, np.ndarray]


class Dense(BaseModel):
    kind: Literal["dense"] = "dense"
    name: str
    in_dim: int
    out_dim: int
    activate: bool = True

    @property
    def fan_in(self) -> int:
        return self.in_dim

    @property
    def weight_shape(self) -> Tuple[int, int]:
        return (self.in_dim, self.out_dim)


class Conv2d(BaseModel):
    """Single conv layer, valid padding, stride 1, flattened output."""

    kind: Literal["conv"] = "conv"
    name: str
    geometry: ConvConfig
    activate: bool = True

    @property
    def raw_shape(self) -> Tuple[int, int, int, int]:
        kh, kw = self.geometry.kernel
        return (self.geometry.out_channels, self.geometry.in_channels, kh, kw)

    @property
    def fan_in(self) -> int:
        _, c_in, kh, kw = self.raw_shape
        return c_in * kh * kw

    @property
    def weight_shape(self) -> Tuple[int, int]:
        return (self.fan_in, self.geometry.out_channels)

    @property
    def out_dim(self) -> int:
        return self.geometry.output_dim


Layer = Union[Dense, Conv2d]


class Network(BaseModel):
    """An ordered chain of layers sharing one activation function."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    layers: List[Layer]
    activation: str = "tanh"
    params: Params = Field(default_factory=dict)

    @classmethod
    def build(cls, name: str, layers: Sequence[Layer], activation: str, rng: np.random.Generator) -> "Network":
        """Weights N(0, 1/fan_in), biases zero."""
        params: Params = {}
        for layer in layers:
            params[f"{layer.name}.weight"] = rng.standard_normal(layer.weight_shape) / np.sqrt(layer.fan_in)
            params[f"{layer.name}.bias"] = np.zeros((1, layer.weight_shape[1]))
        return cls(name=name, layers=list(layers), activation=activation, params=params)

    def clone(self) -> "Network":
        return self.model_copy(update={"params": {k: v.copy() for k, v in self.params.items()}})

    def bind(self, tape: GradTape, trainable: bool = True) -> Dict[str, Var]:
        leaf = tape.param if trainable else tape.const
        return {key: leaf(value, name=key) for key, value in self.params.items()}

    def forward(self, tape: GradTape, x: Var, bound: Mapping[str, Var]) -> Tuple[Var, List[Tuple[str, Var]]]:
        """
        Returns:
            (output, [(layer name, layer output), ...])
        """
        stages: List[Tuple[str, Var]] = []
        h = x
        for layer in self.layers:
            w = bound[f"{layer.name}.weight"]
            b = bound[f"{layer.name}.bias"]
            if isinstance(layer, Conv2d):
                h = self._conv(tape, h, w, b, layer)
            else:
                h = tape.add(tape.matmul(h, w), b)
            if layer.activate:
                h = tape.activation(h, self.activation)
            stages.append((layer.name, h))
        return h, stages

    @staticmethod
    def _conv(tape: GradTape, x: Var, w: Var, b: Var, layer: Conv2d) -> Var:
        g = layer.geometry
        n = x.shape[0]
        images = np.asarray(x.value).reshape(n, g.in_channels, g.height, g.width)
        patches = tape.const(im2col(images, g.kernel), name=f"{layer.name}.patches")
        out = tape.add(tape.matmul(patches, w), b)
        return tape.reshape(out, (n, layer.out_dim))

    def evaluate(self, x: Matrix) -> Tuple[Matrix, List[Tuple[str, Matrix]]]:
        """Forward pass on values only."""
        tape = GradTape()
        out, stages = self.forward(tape, tape.const(x), self.bind(tape, trainable=False))
        return out.value, [(name, var.value) for name, var in stages]

    def layer_specs(self) -> List[LayerSpec]:
        """Weights and biases of every layer, in order."""
        specs: List[LayerSpec] = []
        for layer in self.layers:
            weight = self.params[f"{layer.name}.weight"]
            if isinstance(layer, Conv2d):
                specs.append(LayerSpec.conv(f"{layer.name}.weight", conv_unreshape(weight, layer.raw_shape)))
            else:
                specs.append(LayerSpec.linear(f"{layer.name}.weight", weight))
            specs.append(LayerSpec.vector(f"{layer.name}.bias", self.params[f"{layer.name}.bias"], LayerKind.BIAS))
        return specs

    def weight_pairs(self, bound: Mapping[str, Var]) -> List[Tuple[LayerSpec, Var]]:
        """(spec, variable) for every weight, for the orthogonality penalties."""
        pairs = []
        for spec in self.layer_specs():
            if spec.or_eligible:
                pairs.append((spec, bound[spec.name]))
        return pairs

    def deepest_weight(self) -> str:
        return f"{self.layers[-1].name}.weight"


class Embedding(BaseModel):
    """Online outputs for one view."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    representation: Var
    projection: Optional[Var] = None
    prediction: Optional[Var] = None
    stages: List[Tuple[str, Var]] = Field(default_factory=list)

    @property
    def embedding(self) -> Var:
        """Input of the SSL loss on the target side: projection, else representation."""
        return self.projection if self.projection is not None else self.representation

    def whitening_target(self, target: str) -> Var:
        """Features the whitening terms act on; ``embedding`` when the named head is absent."""
        if target == "representation":
            return self.representation
        if target == "predictor" and self.prediction is not None:
            return self.prediction
        return self.embedding


class DualNetState(BaseModel):
    """
    Online encoder + projector (+ predictor for BYOL) and the EMA target copy
    of encoder + projector. The target is never bound as trainable.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    encoder: Network
    projector: Optional[Network] = None
    predictor: Optional[Network] = None
    target_encoder: Optional[Network] = None
    target_projector: Optional[Network] = None
    ema_tau: float = 0.99

    def online_networks(self) -> List[Network]:
        return [net for net in (self.encoder, self.projector, self.predictor) if net is not None]

    def target_pairs(self) -> List[Tuple[Network, Network]]:
        pairs = []
        if self.target_encoder is not None:
            pairs.append((self.target_encoder, self.encoder))
        if self.target_projector is not None and self.projector is not None:
            pairs.append((self.target_projector, self.projector))
        return pairs

    @property
    def has_target(self) -> bool:
        return self.target_encoder is not None

    def online_params(self) -> Params:
        params: Params = {}
        for net in self.online_networks():
            params.update(net.params)
        return params

    def bind_online(self, tape: GradTape) -> Dict[str, Var]:
        bound: Dict[str, Var] = {}
        for net in self.online_networks():
            bound.update(net.bind(tape, trainable=True))
        return bound

    def online_forward(self, tape: GradTape, x: Matrix, bound: Mapping[str, Var]) -> Embedding:
        r, stages = self.encoder.forward(tape, tape.const(x), bound)
        emb = Embedding(representation=r, stages=list(stages))
        if self.projector is not None:
            emb.projection, _ = self.projector.forward(tape, r, bound)
        if self.predictor is not None:
            emb.prediction, _ = self.predictor.forward(tape, emb.embedding, bound)
        return emb

    def target_embed(self, x: Matrix) -> Matrix:
        """Target projection (or representation) values; recorded on a throwaway tape."""
        if self.target_encoder is None:
            raise ValueError("state has no target network")
        h, _ = self.target_encoder.evaluate(x)
        if self.target_projector is not None:
            h, _ = self.target_projector.evaluate(h)
        return h

    def represent(self, x: Matrix) -> Matrix:
        return self.encoder.evaluate(x)[0]

    def feature_stages(self, x: Matrix) -> List[Tuple[str, Matrix]]:
        """The input itself, then the activations of every encoder layer and of the heads on ``x``."""
        r, stages = self.encoder.evaluate(x)
        out = [("input", np.asarray(x, dtype=np.float64)), *stages]
        h = r
        if self.projector is not None:
            h, _ = self.projector.evaluate(h)
            out.append((self.projector.name, h))
        if self.predictor is not None:
            p, _ = self.predictor.evaluate(h)
            out.append((self.predictor.name, p))
        return out

    def apply_update(self, grads: Mapping[str, np.ndarray], lr: float) -> None:
        """Plain SGD step on the online parameters."""
        for net in self.online_networks():
            for key in net.params:
                net.params[key] = net.params[key] - lr * grads[key]


def _encoder_layers(cfg: TrainConfig) -> List[Layer]:
    layers: List[Layer] = []
    width = cfg.data.dim
    if cfg.conv.enabled:
        conv = Conv2d(name="encoder.conv0", geometry=cfg.conv)
        layers.append(conv)
        width = conv.out_dim
    for index, hidden in enumerate(list(cfg.dims.hidden) + [cfg.dims.repr]):
        layers.append(Dense(name=f"encoder.fc{index}", in_dim=width, out_dim=hidden))
        width = hidden
    return layers


def _head_layers(name: str, in_dim: int, hidden: int, out_dim: int) -> List[Layer]:
    return [
        Dense(name=f"{name}.fc0", in_dim=in_dim, out_dim=hidden),
        Dense(name=f"{name}.fc1", in_dim=hidden, out_dim=out_dim, activate=False),
    ]


def build_state(cfg: TrainConfig) -> DualNetState:
    """
    Initialize the networks for ``cfg.method``.

    The target copy (BYOL only) has the online structure but its own draw of
    weights.
    """
    online_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    target_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 4]))
    dims = cfg.dims

    encoder_layers = _encoder_layers(cfg)
    encoder = Network.build("encoder", encoder_layers, cfg.activation, online_rng)
    projector = None
    if dims.proj is not None:
        projector = Network.build(
            "projector", _head_layers("projector", dims.repr, dims.proj_hidden, dims.proj), cfg.activation, online_rng
        )
    embed_dim = dims.proj if dims.proj is not None else dims.repr

    state = DualNetState(encoder=encoder, projector=projector, ema_tau=cfg.ema_tau)
    if cfg.method == "byol":
        state.predictor = Network.build(
            "predictor", _head_layers("predictor", embed_dim, dims.proj_hidden, embed_dim), cfg.activation, online_rng
        )
        state.target_encoder = Network.build("target_encoder", encoder_layers, cfg.activation, target_rng)
        if projector is not None:
            state.target_projector = Network.build(
                "target_projector", projector.layers, cfg.activation, target_rng
            )
    logger.debug(f"Built {cfg.method} networks: {len(state.online_params())} online parameter tensors")
    return state


def ema_update(state: DualNetState, tau: Optional[float] = None) -> DualNetState:
    """Parameter-wise target <- tau * target + (1 - tau) * online."""
    tau = state.ema_tau if tau is None else tau
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"ema tau must be in [0, 1), got {tau}")
    for target, online in state.target_pairs():
        for key, value in online.params.items():
            target.params[key] = tau * target.params[key] + (1.0 - tau) * value
    return state
