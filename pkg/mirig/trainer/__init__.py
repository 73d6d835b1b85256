from mirig.trainer.checkpoint import (
    CheckpointFormatError as CheckpointFormatError,
    CheckpointMetadata as CheckpointMetadata,
    EncoderCheckpoint as EncoderCheckpoint,
    checkpoint_bytes as checkpoint_bytes,
    encode as encode,
    load_checkpoint as load_checkpoint,
    save_checkpoint as save_checkpoint,
)
from mirig.trainer.loop import (
    TrainingDivergedError as TrainingDivergedError,
    initial_checkpoint as initial_checkpoint,
    train as train,
)
from mirig.trainer.models import (
    Architecture as Architecture,
    add_encoder as add_encoder,
    add_head as add_head,
    encoder_graph as encoder_graph,
    training_graph as training_graph,
)
from mirig.trainer.negatives import negative_pool as negative_pool
