from functools import lru_cache

from mirig.diffengine import Graph, GraphBuilder, SymDim
from mirig.objective.loss import add_contrastive_terms
from mirig.trainer.models import CRITIC_PREFIX, add_head


@lru_cache(maxsize=16)
def critic_graph(
    repr_dim: int,
    hidden_dim: int,
    proj_dim: int,
    temperature: float,
) -> Graph:
    """
    f_c over frozen representation pairs (`hx`, `hy`), scored with the NT-Xent
    terms. Same shape as the projection head, under its own parameter names.

    """
    builder = GraphBuilder()
    K = SymDim.of("K")
    zx = add_head(
        builder,
        builder.input("hx", (K, repr_dim)),
        CRITIC_PREFIX,
        repr_dim,
        hidden_dim,
        proj_dim,
    )
    zy = add_head(
        builder,
        builder.input("hy", (K, repr_dim)),
        CRITIC_PREFIX,
        repr_dim,
        hidden_dim,
        proj_dim,
    )
    terms = add_contrastive_terms(builder, zx, zy, temperature)
    builder.output("terms", terms)
    builder.output("loss", builder.mean(terms))
    return builder.build()
