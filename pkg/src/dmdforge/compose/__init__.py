"""Background curation, placement, deduplication and copy-paste composition."""
from .boxes import (
    PlacementBox,
    clamp_box,
    correct_aspect_ratio,
    downscale_background,
    enforce_min_area,
    mask_aspect_ratio,
    mask_bbox,
    rescale_box,
)
from .composer import (
    CompositeRecord,
    DatasetComposer,
    ForegroundItem,
    TripletRegistry,
    composite,
    curate_backgrounds,
    dedup_check,
    generate_dataset,
    harmonize,
    load_foregrounds,
    read_manifest,
    write_manifest,
)
from .scorers import FopaScorer, PlacementScorer, RandomScorer, make_scorer
