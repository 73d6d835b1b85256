from mirig.pairing.augment import (
    color_jitter as color_jitter,
    random_resized_crop as random_resized_crop,
)
from mirig.pairing.batch import (
    ClassIndex as ClassIndex,
    NoValidPairsError as NoValidPairsError,
    PairBatch as PairBatch,
    make_pairs as make_pairs,
    pair_augment as pair_augment,
    pair_same_class as pair_same_class,
)
from mirig.pairing.strategies import (
    AugmentOp as AugmentOp,
    Augmented as Augmented,
    AugmentSpec as AugmentSpec,
    PairingStrategy as PairingStrategy,
    SameClass as SameClass,
    simclr_strategy as simclr_strategy,
    strategy_from_config as strategy_from_config,
    strategy_to_config as strategy_to_config,
)
