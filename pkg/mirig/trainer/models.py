from functools import lru_cache
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from mirig.config.config import EncoderRecipe, TrainConfig
from mirig.diffengine import Graph, GraphBuilder, Ref, SymDim
from mirig.objective.loss import add_contrastive_terms

IMAGE_CHANNELS = 3
CONV_CHANNELS = (16, 32)
MLP_HIDDEN = 256

ENCODER_PREFIX = "enc"
HEAD_PREFIX = "proj"
CRITIC_PREFIX = "critic"


class Architecture(BaseModel):
    """
    Everything needed to rebuild the encoder and projection head graphs without
    the config that trained them.

    """

    model_config = ConfigDict(frozen=True)

    encoder: EncoderRecipe = "small_conv"
    image_size: int = Field(ge=1)
    repr_dim: int = Field(default=64, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    proj_dim: int = Field(default=32, ge=1)

    @classmethod
    def from_config(cls, config: TrainConfig, image_size: int) -> "Architecture":
        return cls(
            encoder=config.encoder,
            image_size=image_size,
            repr_dim=config.repr_dim,
            hidden_dim=config.hidden_dim,
            proj_dim=config.proj_dim,
        )


def dense(
    builder: GraphBuilder,
    x: Ref,
    name: str,
    d_in: int,
    d_out: int,
) -> Ref:
    weight = builder.param(f"{name}.w", (d_in, d_out), fan_in=d_in)
    bias = builder.param(f"{name}.b", (d_out,), init="zeros")
    return builder.affine(x, weight, bias)


def conv_block(
    builder: GraphBuilder,
    x: Ref,
    name: str,
    c_in: int,
    c_out: int,
) -> Ref:
    weight = builder.param(f"{name}.w", (c_out, c_in, 3, 3), fan_in=c_in * 9)
    bias = builder.param(f"{name}.b", (c_out,), init="zeros")
    return builder.relu(builder.conv2d(x, weight, bias, stride=2))


def add_encoder(builder: GraphBuilder, images: Ref, arch: Architecture) -> Ref:
    """
    f_e: images (B, 3, S, S) to representations (B, repr_dim). Repeated calls on
    one builder share parameters.

    """
    if arch.encoder == "small_conv":
        widths = (IMAGE_CHANNELS, *CONV_CHANNELS, arch.repr_dim)
        x = images
        for block, (c_in, c_out) in enumerate(zip(widths, widths[1:])):
            x = conv_block(builder, x, f"{ENCODER_PREFIX}.conv{block}", c_in, c_out)
        return builder.gap(x)

    flat_dim = IMAGE_CHANNELS * arch.image_size * arch.image_size
    x = builder.flatten(images)
    x = builder.relu(dense(builder, x, f"{ENCODER_PREFIX}.fc0", flat_dim, MLP_HIDDEN))
    return dense(builder, x, f"{ENCODER_PREFIX}.fc1", MLP_HIDDEN, arch.repr_dim)


def add_head(
    builder: GraphBuilder,
    h: Ref,
    prefix: str,
    in_dim: int,
    hidden_dim: int,
    out_dim: int,
) -> Ref:
    """
    Two-layer MLP with unit-norm output; used for both f_p and the critic f_c.
    """
    x = builder.relu(dense(builder, h, f"{prefix}.fc0", in_dim, hidden_dim))
    return builder.l2norm(dense(builder, x, f"{prefix}.fc1", hidden_dim, out_dim))


def _image_shape(arch: Architecture, batch: str) -> tuple:
    return (SymDim.of(batch), IMAGE_CHANNELS, arch.image_size, arch.image_size)


@lru_cache(maxsize=16)
def encoder_graph(arch: Architecture) -> Graph:
    """
    Forward-only encoder: `x` to `h` and its unit-norm version `h_unit`.
    """
    builder = GraphBuilder()
    h = add_encoder(builder, builder.input("x", _image_shape(arch, "B")), arch)
    builder.output("h", h)
    builder.output("h_unit", builder.l2norm(h))
    return builder.build()


@lru_cache(maxsize=16)
def training_graph(
    arch: Architecture,
    temperature: float,
    negatives: Literal["in_batch", "external"] = "in_batch",
) -> Graph:
    """
    Encoder and projection head applied to both views (and to external negatives
    when asked for), feeding the NT-Xent terms.

    """
    builder = GraphBuilder()

    def embed(name: str, batch: str) -> Ref:
        h = add_encoder(builder, builder.input(name, _image_shape(arch, batch)), arch)
        return add_head(
            builder, h, HEAD_PREFIX, arch.repr_dim, arch.hidden_dim, arch.proj_dim
        )

    zx = embed("x", "K")
    zy = embed("y", "K")
    zn = embed("neg", "M") if negatives == "external" else None
    terms = add_contrastive_terms(builder, zx, zy, temperature, zn)
    builder.output("terms", terms)
    builder.output("loss", builder.mean(terms))
    return builder.build()
