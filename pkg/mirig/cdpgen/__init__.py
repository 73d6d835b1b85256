from mirig.cdpgen.attributes import (
    PROBE_TASKS as PROBE_TASKS,
    Attribute as Attribute,
    CdpAttributes as CdpAttributes,
    Color as Color,
    Digit as Digit,
    Position as Position,
    TaskSpec as TaskSpec,
    class_entropy as class_entropy,
    sample_attributes as sample_attributes,
)
from mirig.cdpgen.dataset import (
    CdpDataset as CdpDataset,
    background_only as background_only,
    make_dataset as make_dataset,
    uniform_noise as uniform_noise,
)
from mirig.cdpgen.packed import (
    PackedFormatError as PackedFormatError,
    read_packed as read_packed,
    write_packed as write_packed,
)
from mirig.cdpgen.render import (
    UnsupportedSizeError as UnsupportedSizeError,
    oracle_classify as oracle_classify,
    render as render,
)
